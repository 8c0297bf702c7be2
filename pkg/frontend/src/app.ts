/**
 * Application wiring: session lifecycle, document upload, the retrieval
 * parameter panel, and the ask/answer conversation flow.
 *
 * The UI is a pure client of the HTTP API: all durable state lives in
 * the service, so a reload with a valid session id restores document
 * counts and configuration.
 */

import { ApiClient, ApiError } from "./api.js";
import { PARAM_SPECS, toOverrides, validateParam, type ParamValues } from "./params.js";
import { renderAnswerCard } from "./render.js";
import { UiSessionState } from "./state.js";
import type { McqOption } from "./types.js";

const OPTION_LABELS = ["A", "B", "C", "D"] as const;

export class App {
  readonly state = new UiSessionState();

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private window_: Window = window,
  ) {}

  // --- boot ---------------------------------------------------------------

  async start(): Promise<void> {
    this.root.innerHTML = LAYOUT;
    this.bindEvents();
    this.renderParams();
    const fromHash = this.window_.location.hash.match(/session=([0-9a-f]+)/);
    if (fromHash) {
      await this.restoreSession(fromHash[1]);
    }
    this.refreshControls();
  }

  private bindEvents(): void {
    this.q<HTMLButtonElement>("#new-session").addEventListener("click", () => {
      void this.newSession();
    });
    this.q<HTMLInputElement>("#file-input").addEventListener("change", (ev) => {
      const input = ev.target as HTMLInputElement;
      void this.uploadFiles(input.files);
    });
    this.q<HTMLFormElement>("#ask-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.ask();
    });
    this.q<HTMLInputElement>("#mcq-toggle").addEventListener("change", () => {
      this.q("#mcq-options").classList.toggle(
        "hidden",
        !this.q<HTMLInputElement>("#mcq-toggle").checked,
      );
    });
    this.q<HTMLButtonElement>("#retry").addEventListener("click", () => {
      this.banner(null);
      void this.newSession();
    });
  }

  q<T extends Element = HTMLElement>(selector: string): T {
    const node = this.root.querySelector<T>(selector);
    if (!node) throw new Error(`missing element ${selector}`);
    return node;
  }

  // --- session ------------------------------------------------------------

  async newSession(): Promise<void> {
    try {
      const handle = await this.client.createSession(toOverrides(this.state.params));
      this.state.handle = handle;
      this.state.docs = [];
      this.state.conversation = [];
      this.q("#cards").innerHTML = "";
      this.q("#doc-list").innerHTML = "";
      this.window_.location.hash = `session=${handle.session_id}`;
      this.banner(null);
    } catch (err) {
      this.banner(`Service unavailable: ${describe(err)}`);
    }
    this.refreshControls();
  }

  async restoreSession(id: string): Promise<void> {
    try {
      this.state.handle = await this.client.getSession(id);
      this.banner(null);
    } catch (err) {
      this.banner(`Could not restore session ${id}: ${describe(err)}`);
    }
  }

  // --- documents ----------------------------------------------------------

  async uploadFiles(files: FileList | null): Promise<void> {
    if (!files || files.length === 0 || !this.state.sessionId) return;
    const docs: { filename: string; content: string }[] = [];
    for (const file of Array.from(files)) {
      docs.push({ filename: file.name, content: await file.text() });
    }
    try {
      const before = this.state.handle?.chunk_count ?? 0;
      const updated = await this.client.addDocuments(this.state.sessionId, docs);
      this.state.handle = updated;
      for (const doc of docs) {
        this.state.docs.push({ filename: doc.filename, chunks: 0 });
      }
      this.state.docs[this.state.docs.length - 1].chunks =
        updated.chunk_count - before;
      this.renderDocs();
      this.banner(null);
    } catch (err) {
      this.banner(`Upload failed: ${describe(err)}`);
    }
    this.refreshControls();
  }

  private renderDocs(): void {
    const list = this.q("#doc-list");
    list.innerHTML = "";
    for (const doc of this.state.docs) {
      const item = document.createElement("li");
      item.textContent = doc.filename;
      list.append(item);
    }
    const handle = this.state.handle;
    this.q("#doc-counts").textContent = handle
      ? `${handle.doc_count} documents, ${handle.chunk_count} chunks`
      : "";
  }

  // --- parameter panel ----------------------------------------------------

  private renderParams(): void {
    const panel = this.q("#params");
    panel.innerHTML = "";
    for (const spec of PARAM_SPECS) {
      const row = document.createElement("label");
      row.className = "param-row";
      row.append(document.createTextNode(spec.label));
      let input: HTMLInputElement | HTMLSelectElement;
      if (spec.choices) {
        input = document.createElement("select");
        for (const choice of spec.choices) {
          const opt = document.createElement("option");
          opt.value = choice;
          opt.textContent = choice;
          input.append(opt);
        }
      } else {
        input = document.createElement("input");
        input.type = "number";
        if (spec.min !== undefined) input.min = String(spec.min);
        if (spec.max !== undefined) input.max = String(spec.max);
        if (spec.step !== undefined) input.step = String(spec.step);
      }
      input.dataset.param = spec.key;
      input.value = String(this.state.params[spec.key]);
      input.addEventListener("change", () => this.paramChanged(spec.key, input.value));
      row.append(input);
      const msg = document.createElement("span");
      msg.className = "param-error";
      msg.dataset.errorFor = spec.key;
      row.append(msg);
      panel.append(row);
    }
  }

  paramChanged(key: keyof ParamValues, raw: string): void {
    const error = validateParam(key, raw);
    const msg = this.q<HTMLElement>(`[data-error-for="${key}"]`);
    msg.textContent = error ?? "";
    if (error) return; // out-of-range values never reach the wire
    if (key === "mode") {
      this.state.params.mode = raw as ParamValues["mode"];
    } else {
      (this.state.params[key] as number) = Number(raw);
    }
  }

  // --- asking -------------------------------------------------------------

  collectOptions(): McqOption[] | null {
    if (!this.q<HTMLInputElement>("#mcq-toggle").checked) return null;
    const options: McqOption[] = [];
    for (const label of OPTION_LABELS) {
      const text = this.q<HTMLInputElement>(`#opt-${label}`).value.trim();
      if (text) options.push({ label, text });
    }
    return options.length > 0 ? options : null;
  }

  async ask(): Promise<void> {
    const sessionId = this.state.sessionId;
    const question = this.q<HTMLTextAreaElement>("#question").value.trim();
    if (!sessionId || !question || this.state.queryInFlight) return;

    const options = this.collectOptions();
    const turn = { question, options, response: null, error: null };
    this.state.pushTurn(turn);
    const card = renderAnswerCard(question, options, null, null);
    this.q("#cards").append(card);

    this.state.queryInFlight = true; // one in-flight query per session
    this.refreshControls();
    try {
      const response = await this.client.query(sessionId, {
        question,
        options: options ?? undefined,
        mode: this.state.params.mode,
        overrides: toOverrides(this.state.params),
      });
      turn.response = response;
      card.replaceWith(renderAnswerCard(question, options, response, null));
    } catch (err) {
      turn.error = describe(err);
      card.replaceWith(renderAnswerCard(question, options, null, turn.error));
    } finally {
      this.state.queryInFlight = false;
      this.refreshControls();
    }
  }

  // --- chrome -------------------------------------------------------------

  banner(message: string | null): void {
    const banner = this.q("#banner");
    banner.classList.toggle("hidden", message === null);
    this.q("#banner-text").textContent = message ?? "";
  }

  refreshControls(): void {
    const status = this.q("#session-status");
    status.textContent = this.state.sessionId
      ? `session ${this.state.sessionId}`
      : "no session";
    this.q<HTMLInputElement>("#file-input").disabled = !this.state.sessionId;
    const askDisabled =
      !this.state.sessionId || !this.state.hasDocuments || this.state.queryInFlight;
    this.q<HTMLButtonElement>("#ask-button").disabled = askDisabled;
    this.q<HTMLTextAreaElement>("#question").disabled = !this.state.sessionId;
    this.renderDocs();
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

const LAYOUT = `
<header>
  <h1>ragrank</h1>
  <span id="session-status">no session</span>
  <button id="new-session">New session</button>
</header>
<div id="banner" class="hidden"><span id="banner-text"></span>
  <button id="retry">Retry</button></div>
<main>
  <aside>
    <section>
      <h2>Documents</h2>
      <input id="file-input" type="file" multiple accept=".txt,.md,.markdown,.jsonl" disabled>
      <ul id="doc-list"></ul>
      <div id="doc-counts"></div>
    </section>
    <section>
      <h2>Retrieval parameters</h2>
      <div id="params"></div>
    </section>
  </aside>
  <section id="conversation">
    <div id="cards"></div>
    <form id="ask-form">
      <textarea id="question" rows="2" placeholder="Ask a question about the uploaded documents" disabled></textarea>
      <label class="mcq"><input id="mcq-toggle" type="checkbox"> multiple choice</label>
      <div id="mcq-options" class="hidden">
        <input id="opt-A" placeholder="Option A">
        <input id="opt-B" placeholder="Option B">
        <input id="opt-C" placeholder="Option C">
        <input id="opt-D" placeholder="Option D">
      </div>
      <button id="ask-button" type="submit" disabled>Ask</button>
    </form>
  </section>
</main>
`;

export async function initApp(root: HTMLElement, client: ApiClient): Promise<App> {
  const app = new App(root, client);
  await app.start();
  return app;
}
