import init, { ids_curve, pattern_frequencies, decorated_ground_state } from "./pkg/quasispec_wasm.js";

const $ = (id) => document.getElementById(id);

function drawIds() {
  const r = JSON.parse(ids_curve(Number($("ids-level").value), 400));
  const c = $("ids-canvas"), g = c.getContext("2d");
  const pad = 30, w = c.width - 2 * pad, h = c.height - 2 * pad;
  const x0 = r.x[0], x1 = r.x[r.x.length - 1];
  const px = (x) => pad + (w * (x - x0)) / (x1 - x0);
  const py = (y) => pad + h * (1 - y);
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  for (const [key, colour] of [["reference", "#d33"], ["staircase", "#236"]]) {
    g.beginPath();
    g.strokeStyle = colour;
    r.x.forEach((x, i) => (i ? g.lineTo : g.moveTo).call(g, px(x), py(r[key][i])));
    g.stroke();
  }
  $("ids-info").textContent = `|Q| = ${r.size}, sup distance ${r.sup_distance.toExponential(3)}`;
}

function countPatterns() {
  const r = JSON.parse(
    pattern_frequencies($("pf-graph").value, Number($("pf-radius").value), Number($("pf-level").value)),
  );
  const lines = r.patterns.map((p) => `${p.frequency.padStart(12)}  ${p.code}`);
  $("pf-out").textContent = `|Q| = ${r.size}, ${r.patterns.length} patterns\n` + lines.join("\n");
}

function solveGroundState() {
  const r = JSON.parse(decorated_ground_state(1, 2, BigInt($("gs-seed").value), Number($("gs-level").value)));
  const c = $("gs-canvas"), g = c.getContext("2d");
  const n = r.level, step = (c.width - 40) / (2 * n);
  const pos = ([a, b]) => [20 + (a + n) * step, c.height - 20 - (b + n) * step];
  const amax = Math.max(...r.amplitudes.map(Math.abs));
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#bbb";
  for (const [i, j] of r.edges) {
    const [ax, ay] = pos(r.vertices[i]), [bx, by] = pos(r.vertices[j]);
    g.beginPath();
    g.moveTo(ax, ay);
    g.lineTo(bx, by);
    g.stroke();
  }
  r.vertices.forEach((v, i) => {
    const [x, y] = pos(v), a = Math.abs(r.amplitudes[i]) / amax;
    g.fillStyle = `rgba(30, 60, 160, ${0.15 + 0.85 * a})`;
    g.beginPath();
    g.arc(x, y, Math.max(2, step * 0.3), 0, 2 * Math.PI);
    g.fill();
  });
  $("gs-info").textContent = `lowest eigenvalue ${r.energy.toFixed(6)}`;
}

await init();
$("ids-run").onclick = drawIds;
$("pf-run").onclick = countPatterns;
$("gs-run").onclick = solveGroundState;
drawIds();
countPatterns();
solveGroundState();
