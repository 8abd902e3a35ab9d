import init, { solve, budget_path, train } from "./pkg/drro_demo.js";

const COLORS = { GRPO: "#1f77b4", DRRO_soft_dynamic: "#2ca02c", DRO: "#d62728", drro: "#2ca02c", dro: "#d62728" };
const $ = (id) => document.getElementById(id);

function fail(target, err) {
  target.innerHTML = `<p class="error">${String(err)}</p>`;
}

function fmt(x) {
  return Number(x).toFixed(4);
}

function policyTable(rows) {
  const head = rows[0][1].map((_, i) => `<th>y${i + 1}</th>`).join("");
  const body = rows
    .map(([name, p]) => `<tr><th>${name}</th>${p.map((v) => `<td>${fmt(v)}</td>`).join("")}</tr>`)
    .join("");
  return `<table class="bars"><tr><th></th>${head}</tr>${body}</table>`;
}

// Line chart of named series over a shared x axis.
function chart(xs, series, xLabel, yLabel) {
  const w = 860, h = 280, pad = 40;
  const ys = series.flatMap((s) => s.values);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 === y0) y1 = y0 + 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  const lines = series
    .map((s) => {
      const d = s.values.map((y, i) => `${i ? "L" : "M"}${sx(xs[i]).toFixed(1)},${sy(y).toFixed(1)}`).join("");
      return `<path d="${d}" fill="none" stroke="${s.color}" stroke-width="2" ${s.dash ? 'stroke-dasharray="5,4"' : ""}/>`;
    })
    .join("");
  const legend = series
    .map((s, i) => `<text x="${pad + 10}" y="${pad + 14 * i}" fill="${s.color}">${s.name}</text>`)
    .join("");
  return `<svg width="${w}" height="${h}">
    <line x1="${pad}" y1="${h - pad}" x2="${w - pad}" y2="${h - pad}" stroke="#999"/>
    <line x1="${pad}" y1="${pad / 2}" x2="${pad}" y2="${h - pad}" stroke="#999"/>
    <text x="${w / 2}" y="${h - 8}" text-anchor="middle">${xLabel}</text>
    <text x="12" y="${h / 2}" transform="rotate(-90 12 ${h / 2})" text-anchor="middle">${yLabel}</text>
    <text x="${pad - 4}" y="${sy(y1) + 4}" text-anchor="end" font-size="11">${y1.toFixed(2)}</text>
    <text x="${pad - 4}" y="${sy(y0) + 4}" text-anchor="end" font-size="11">${y0.toFixed(2)}</text>
    <text x="${w - pad}" y="${h - pad + 14}" text-anchor="end" font-size="11">${x1.toFixed(2)}</text>
    ${lines}${legend}</svg>`;
}

function runSolve() {
  const out = $("s-out");
  try {
    const r = JSON.parse(solve($("s-rewards").value, Number($("s-delta").value)));
    const level = r.t_star === undefined ? "greedy (δ = 0)" : `t₀ = ${fmt(r.t0)}, t* = ${fmt(r.t_star)}`;
    out.innerHTML = `<p>${level}</p>${policyTable([
      ["regret-robust", r.drro.policy],
      ["DRO", r.dro.policy],
    ])}<p>worst-case regret: regret-robust ${fmt(r.drro.worst_case_regret)}, DRO ${fmt(r.dro.worst_case_regret)}
      (DRO support ${r.dro.support_size})</p>`;
  } catch (e) {
    fail(out, e);
  }
}

function runPath() {
  const out = $("p-out");
  try {
    const rows = JSON.parse(budget_path($("p-rewards").value, Number($("p-max").value), 121));
    const xs = rows.map((r) => r.delta);
    out.innerHTML =
      chart(xs, [
        { name: "regret-robust worst-case regret", color: COLORS.drro, values: rows.map((r) => r.drro_regret) },
        { name: "DRO worst-case regret", color: COLORS.dro, values: rows.map((r) => r.dro_regret) },
      ], "budget δ", "regret") +
      chart(xs, [
        { name: "regret-robust support", color: COLORS.drro, values: rows.map((r) => r.drro_support) },
        { name: "DRO support", color: COLORS.dro, values: rows.map((r) => r.dro_support), dash: true },
      ], "budget δ", "support size");
  } catch (e) {
    fail(out, e);
  }
}

function runTrain() {
  const out = $("t-out");
  out.textContent = "training…";
  // Let the status paint before the synchronous run.
  setTimeout(() => {
    try {
      const r = JSON.parse(train(Number($("t-seed").value), Number($("t-iters").value)));
      const steps = r.curves[0].gold.map((_, i) => i);
      const gold = r.curves.map((c) => ({ name: `${c.method} gold`, color: COLORS[c.method], values: c.gold }));
      const proxy = r.curves.map((c) => ({ name: `${c.method} proxy`, color: COLORS[c.method], values: c.proxy, dash: true }));
      out.innerHTML =
        `<p>proxy/gold pairwise agreement ${(100 * r.measured_agreement).toFixed(1)}%</p>` +
        chart(steps, gold, "checkpoint", "gold improvement") +
        chart(steps, proxy, "checkpoint", "proxy improvement");
    } catch (e) {
      fail(out, e);
    }
  }, 10);
}

await init();
$("s-run").addEventListener("click", runSolve);
$("p-run").addEventListener("click", runPath);
$("t-run").addEventListener("click", runTrain);
runSolve();
runPath();
