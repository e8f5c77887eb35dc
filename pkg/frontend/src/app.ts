import { ApiClient } from "./api.js";
import { KIND_ORDER, colorFor } from "./colors.js";
import { evidenceRows } from "./evidence.js";
import { SLIDERS } from "./sliders.js";
import { SessionController, ViewState } from "./state.js";
import { drawWaveform, hitTest } from "./waveform.js";

const api = new ApiClient("");
const controller = new SessionController(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function renderLegend(): void {
  const legend = el<HTMLDivElement>("legend");
  legend.innerHTML = "";
  for (const kind of KIND_ORDER) {
    const chip = document.createElement("span");
    chip.className = "chip";
    chip.style.background = colorFor(kind);
    chip.textContent = kind;
    legend.appendChild(chip);
  }
}

function renderSliders(state: ViewState): void {
  const host = el<HTMLDivElement>("sliders");
  if (host.childElementCount === 0) {
    for (const def of SLIDERS) {
      const row = document.createElement("div");
      row.className = "slider-row";
      row.innerHTML = `
        <label for="sl-${def.field}">${def.label}
          <span class="unit">(${def.unit})</span></label>
        <input type="range" id="sl-${def.field}" min="${def.min}"
               max="${def.max}" step="${def.step}">
        <output id="out-${def.field}"></output>`;
      host.appendChild(row);
      const input = row.querySelector("input") as HTMLInputElement;
      input.addEventListener("input", () => {
        controller.setSlider(def.field, Number(input.value));
      });
    }
  }
  for (const def of SLIDERS) {
    const input = el<HTMLInputElement>(`sl-${def.field}`);
    const out = el<HTMLOutputElement>(`out-${def.field}`);
    const value = state.sliders[def.field];
    if (value !== undefined && document.activeElement !== input) {
      input.value = String(value);
    }
    out.textContent = value === undefined ? "" : String(value);
  }
}

function renderEvents(state: ViewState): void {
  const list = el<HTMLTableSectionElement>("event-rows");
  list.innerHTML = "";
  if (!state.report) return;
  for (const ev of state.report.events) {
    const tr = document.createElement("tr");
    if (ev.id === state.selectedEventId) tr.className = "selected";
    const verdict = state.verdicts[ev.id];
    const badge = verdict === "accepted" ? "badge-accept"
      : verdict === "rejected" ? "badge-reject"
      : verdict ? "badge-other" : "";
    tr.innerHTML = `
      <td><span class="dot" style="background:${colorFor(ev.kind)}"></span>
          ${ev.kind}</td>
      <td>${ev.start_s}</td><td>${ev.end_s}</td>
      <td>${ev.confidence}</td>
      <td>${verdict ? `<span class="badge ${badge}">${verdict}</span>` : ""}</td>`;
    tr.addEventListener("click", () => controller.selectEvent(ev.id));
    list.appendChild(tr);
  }
  const counts = el<HTMLDivElement>("counts");
  counts.textContent = state.report
    ? Object.entries(state.report.counts).map(([k, v]) => `${k}: ${v}`).join("   ")
      + `   rate: ${state.report.speaking_rate} syll/s   v${state.version}`
    : "";
}

function renderEvidence(state: ViewState): void {
  const host = el<HTMLTableSectionElement>("evidence-rows");
  host.innerHTML = "";
  const ev = controller.selectedEvent();
  el<HTMLDivElement>("feedback-bar").style.display = ev ? "flex" : "none";
  if (!ev) return;
  for (const [k, v] of evidenceRows(ev)) {
    const tr = document.createElement("tr");
    tr.innerHTML = `<td>${k}</td><td class="mono">${v}</td>`;
    host.appendChild(tr);
  }
}

function renderAudit(state: ViewState): void {
  const host = el<HTMLTableSectionElement>("audit-rows");
  host.innerHTML = "";
  for (const row of [...state.audit].reverse().slice(0, 40)) {
    const tr = document.createElement("tr");
    const when = new Date(row.ts * 1000).toLocaleTimeString();
    tr.innerHTML = `<td>${when}</td><td>${row.field}</td>
      <td class="mono">${row.old} &rarr; ${row.new}</td><td>${row.author}</td>`;
    host.appendChild(tr);
  }
}

function renderBanner(state: ViewState): void {
  const banner = el<HTMLDivElement>("banner");
  banner.style.display = state.banner ? "block" : "none";
  banner.textContent = state.banner ?? "";
  el<HTMLButtonElement>("retry").style.display =
    state.offline ? "inline-block" : "none";
  el<HTMLButtonElement>("refresh").style.display =
    state.refreshPrompt ? "inline-block" : "none";
}

function render(state: ViewState): void {
  renderSliders(state);
  renderEvents(state);
  renderEvidence(state);
  renderAudit(state);
  renderBanner(state);
  const canvas = el<HTMLCanvasElement>("wave");
  drawWaveform(canvas, state.peaks, state.durationS,
               state.report?.events ?? [], state.selectedEventId);
}

async function refreshSessionList(): Promise<void> {
  const select = el<HTMLSelectElement>("session-select");
  const { sessions } = await api.listSessions();
  select.innerHTML = "<option value=''>choose a session...</option>";
  for (const s of sessions) {
    const opt = document.createElement("option");
    opt.value = s.id;
    const counts = Object.entries(s.counts)
      .filter(([, v]) => v > 0).map(([k, v]) => `${k}:${v}`).join(" ");
    opt.textContent = `${s.id}  ${counts}`;
    select.appendChild(opt);
  }
}

export function start(): void {
  renderLegend();
  controller.onChange(render);

  el<HTMLSelectElement>("session-select").addEventListener("change", (e) => {
    const id = (e.target as HTMLSelectElement).value;
    if (id) void controller.load(id);
  });

  el<HTMLInputElement>("upload").addEventListener("change", async (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file) return;
    const payload = await api.createSession(await file.arrayBuffer());
    await refreshSessionList();
    await controller.load(payload.id);
  });

  el<HTMLButtonElement>("retry").addEventListener("click", () => {
    void controller.retry();
  });
  el<HTMLButtonElement>("refresh").addEventListener("click", () => {
    if (controller.state.sessionId) void controller.load(controller.state.sessionId);
  });
  el<HTMLButtonElement>("fb-accept").addEventListener("click", () => {
    const ev = controller.selectedEvent();
    if (ev) void controller.submitFeedback(ev.id, "accepted");
  });
  el<HTMLButtonElement>("fb-reject").addEventListener("click", () => {
    const ev = controller.selectedEvent();
    if (ev) void controller.submitFeedback(ev.id, "rejected");
  });

  el<HTMLCanvasElement>("wave").addEventListener("click", (e) => {
    const canvas = e.target as HTMLCanvasElement;
    const rect = canvas.getBoundingClientRect();
    const x = (e.clientX - rect.left) * (canvas.width / rect.width);
    const hit = hitTest(controller.state.report?.events ?? [],
                        controller.state.durationS, canvas.width, x);
    controller.selectEvent(hit ? hit.id : null);
  });

  void refreshSessionList();
}

start();
