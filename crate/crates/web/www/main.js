import init, { kernel_grid, run_example, scan_margins } from "./pkg/mibvp_web.js";

const EXAMPLES = {
  example1: { xi: 0.1, eta: 0.2, l1: 2, l2: 3, lo: 0.01, hi: 2.46, k: 0.49, scan: [0, 2.4674011] },
  example2: { xi: 0.2, eta: 0.3, l1: 0.25, l2: 1 / 9, lo: -10, hi: -0.05, k: -4, scan: [-10, -0.01] },
};
const COLORS = ["#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6a4c93", "#00798c", "#8d6a9f", "#444"];
const $ = (id) => document.getElementById(id);

function call(f, ...args) {
  try {
    return [JSON.parse(f(...args)), null];
  } catch (e) {
    return [null, String(e)];
  }
}

function diverging(t) {
  // t in [-1, 1]: blue for negative, red for positive
  const a = Math.min(1, Math.abs(t));
  const c = Math.round(255 * (1 - a));
  return t < 0 ? `rgb(${c},${c},255)` : `rgb(255,${c},${c})`;
}

function drawKernel() {
  const ex = EXAMPLES[$("example").value];
  const k = Number($("gk").value);
  $("gk-out").textContent = k.toFixed(2);
  const [g, err] = call(kernel_grid, ex.xi, ex.eta, ex.l1, ex.l2, k, 81);
  const cv = $("kernel"), ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  if (err) { $("kernel-status").textContent = err; return; }
  const scale = Math.max(Math.abs(g.min), Math.abs(g.max)) || 1;
  const cell = cv.width / g.n;
  for (let i = 0; i < g.n; i++) {
    for (let j = 0; j < g.n; j++) {
      ctx.fillStyle = diverging(g.values[i * g.n + j] / scale);
      // x to the right, s upward
      ctx.fillRect(i * cell, cv.height - (j + 1) * cell, cell + 0.5, cell + 0.5);
    }
  }
  $("kernel-status").textContent = `min G = ${g.min.toExponential(3)}\nmax G = ${g.max.toExponential(3)}`;
}

function axes(ctx, w, h, xr, yr) {
  const pad = 36;
  const X = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0])) * (w - pad - 8);
  const Y = (y) => h - pad - ((y - yr[0]) / (yr[1] - yr[0])) * (h - pad - 8);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, 8, w - pad - 8, h - pad - 8);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText(xr[0].toFixed(2), pad, h - pad + 14);
  ctx.fillText(xr[1].toFixed(2), w - 40, h - pad + 14);
  ctx.fillText(yr[1].toFixed(2), 2, 16);
  ctx.fillText(yr[0].toFixed(2), 2, h - pad);
  return [X, Y];
}

function polyline(ctx, xs, ys, X, Y, color, width = 1) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  let pen = false;
  xs.forEach((x, i) => {
    const y = ys[i];
    if (!Number.isFinite(y)) { pen = false; return; }
    pen ? ctx.lineTo(X(x), Y(y)) : ctx.moveTo(X(x), Y(y));
    pen = true;
  });
  ctx.stroke();
  ctx.lineWidth = 1;
}

function drawRun() {
  const name = $("example").value;
  const k = Number($("rk").value);
  $("rk-out").textContent = k.toFixed(2);
  const [r, err] = call(run_example, name, k, 201, 3000);
  const cv = $("iterates"), ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  if (err) { $("run-status").textContent = err; return; }
  const all = r.iterates.flatMap(([, c, d]) => c.concat(d));
  const [X, Y] = axes(ctx, cv.width, cv.height, [0, 1], [Math.min(...all), Math.max(...all)]);
  r.iterates.forEach(([n, c, d], i) => {
    const shade = r.iterates.length > 1 ? i / (r.iterates.length - 1) : 1;
    polyline(ctx, r.nodes, c, X, Y, `rgba(27,108,168,${0.25 + 0.75 * shade})`);
    polyline(ctx, r.nodes, d, X, Y, `rgba(209,73,91,${0.25 + 0.75 * shade})`);
  });
  $("run-status").textContent =
    `steps ${r.steps}, converged ${r.converged}, monotone ${r.monotone}\n` +
    `final gap ${r.gaps[r.gaps.length - 1].toExponential(2)}  (blue c_n, red d_n)`;
}

function drawMargins() {
  const name = $("example").value;
  const [lo, hi] = EXAMPLES[name].scan;
  const [m, err] = call(scan_margins, name, lo, hi, 400);
  const cv = $("margins"), ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  if (err) { $("scan-status").textContent = err; return; }
  // signed log scale keeps small and large margins visible together
  const squash = (v) => Math.sign(v) * Math.log10(1 + Math.abs(v) * 100);
  const ys = m.curves.flatMap(([, v]) => v.filter(Number.isFinite).map(squash));
  const [X, Y] = axes(ctx, cv.width, cv.height, [lo, hi], [Math.min(...ys, -0.1), Math.max(...ys, 0.1)]);
  ctx.fillStyle = "rgba(46,147,60,0.12)";
  for (const [a, b] of m.intervals) ctx.fillRect(X(a), 8, X(b) - X(a), cv.height - 44);
  ctx.strokeStyle = "#000";
  ctx.beginPath(); ctx.moveTo(X(lo), Y(0)); ctx.lineTo(X(hi), Y(0)); ctx.stroke();
  const legend = [];
  m.curves.forEach(([id, v], i) => {
    polyline(ctx, m.ks, v.map(squash), X, Y, COLORS[i % COLORS.length], 1.5);
    legend.push(`${id}`);
  });
  ctx.font = "11px sans-serif";
  legend.forEach((id, i) => { ctx.fillStyle = COLORS[i % COLORS.length]; ctx.fillText(id, cv.width - 110, 22 + 13 * i); });
  const iv = m.intervals.map(([a, b]) => `[${a.toFixed(4)}, ${b.toFixed(4)}]`).join(" ") || "none";
  $("scan-status").textContent = `admissible k: ${iv}\n(margin > 0 means the condition holds)`;
}

function setExample() {
  const ex = EXAMPLES[$("example").value];
  for (const id of ["gk", "rk"]) {
    Object.assign($(id), { min: ex.lo, max: ex.hi });
    $(id).value = ex.k;
  }
  drawKernel();
  drawRun();
  drawMargins();
}

await init();
$("example").addEventListener("change", setExample);
$("gk").addEventListener("input", drawKernel);
$("rk").addEventListener("change", drawRun);
$("rk").addEventListener("input", () => { $("rk-out").textContent = Number($("rk").value).toFixed(2); });
setExample();
