import { ConsoleClient } from "./client.js";
import { decisionReady } from "./state.js";
import { renderSession } from "./view.js";

const app = document.getElementById("app") as HTMLElement;
const form = document.getElementById("claim-form") as HTMLFormElement;

const client = new ConsoleClient((state) => {
  app.innerHTML = renderSession(state);
});

form.addEventListener("submit", (ev) => {
  ev.preventDefault();
  const agent = (document.getElementById("agent") as HTMLInputElement).value;
  const token = (document.getElementById("token") as HTMLInputElement).value;
  const proto = location.protocol === "https:" ? "wss" : "ws";
  client.connect(`${proto}://${location.host}/ws`, agent, token);
});

function collectBindings(alt: number): Record<string, string> {
  const bindings: Record<string, string> = {};
  app
    .querySelectorAll<HTMLInputElement>(`input[data-alt="${alt}"]`)
    .forEach((input) => {
      bindings[input.name] = input.value;
    });
  return bindings;
}

app.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement;
  const state = client.current();
  if (target.classList.contains("pass")) {
    client.pass();
    return;
  }
  if (target.classList.contains("choice")) {
    // a choice button is a complete decision: the option is the act
    const alt = Number(target.dataset.alt);
    client.decide(alt, {});
    return;
  }
  if (target.classList.contains("submit")) {
    const alt = Number(target.dataset.alt);
    const bindings = collectBindings(alt);
    if (state.pending && decisionReady(state.pending, alt, bindings)) {
      client.decide(alt, bindings);
    }
  }
});
