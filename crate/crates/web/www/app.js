import init, { trellis, trellisFromModel, yieldPolicy, monteCarlo } from "./pkg/dyninfer_web.js";

const SVG = "http://www.w3.org/2000/svg";
const $ = (id) => document.getElementById(id);

function el(name, attrs = {}, text) {
  const node = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

// Runs `f`, reporting any thrown error in the given element.
function guarded(errorId, f) {
  $(errorId).textContent = "";
  try {
    f();
  } catch (e) {
    $(errorId).textContent = e.message ?? String(e);
  }
}

function drawTrellis(view) {
  const nx = view.x_labels.length;
  const colW = 150, rowH = 90, padX = 70, padY = 40, r = 26;
  const svg = el("svg", { width: padX * 2 + colW * (view.n - 1), height: padY * 2 + rowH * (nx - 1) + 20 });
  const pos = (round, x) => [padX + colW * (round - 1), padY + rowH * x];

  // Non-chosen edges first so the highlighted ones sit on top.
  const edges = [...view.edges].sort((a, b) => a.chosen - b.chosen);
  for (const e of edges) {
    const [x1, y1] = pos(e.round, e.from);
    const [x2, y2] = pos(e.round + 1, e.to);
    const line = el("line", {
      x1: x1 + r, y1, x2: x2 - r, y2,
      stroke: e.deviation ? "#2255cc" : e.chosen ? "#333" : "#bbb",
      "stroke-width": e.chosen ? 1 + 3 * e.prob : 1,
      "stroke-dasharray": e.chosen ? "" : "4 3",
    });
    line.append(el("title", {}, `yhat=${e.yhat}  p=${e.prob}`));
    svg.append(line);
  }
  for (const node of view.nodes) {
    const [cx, cy] = pos(node.round, view.x_labels.indexOf(node.x));
    const g = el("g");
    g.append(el("circle", { cx, cy, r, fill: node.tie ? "#fff6d5" : "#fff", stroke: "#333" }));
    g.append(el("text", { x: cx, y: cy - 3, "text-anchor": "middle", "font-size": 11 }, `x=${node.x}`));
    g.append(el("text", { x: cx, y: cy + 11, "text-anchor": "middle", "font-size": 10 }, node.v_star.toFixed(3)));
    g.append(el("title", {}, `round ${node.round}: V*=${node.v_star}\noptimal ${node.chosen}, myopic ${node.myopic}${node.tie ? " (tie)" : ""}`));
    svg.append(g);
  }
  for (let round = 1; round <= view.n; round++) {
    const [x] = pos(round, 0);
    svg.append(el("text", { x, y: padY + rowH * (nx - 1) + r + 22, "text-anchor": "middle", "font-size": 11, fill: "#666" }, `round ${round}`));
  }
  $("t-svg").replaceChildren(svg);
  $("t-summary").textContent =
    `minimum expected loss ${view.min_loss}; myopic strategy loses ${view.myopic_loss}.`;
}

function runTrellis() {
  guarded("t-error", () => {
    drawTrellis(JSON.parse(trellis($("t-example").value, Number($("t-n").value), $("t-tie").value)));
  });
}

function runTrellisModel() {
  guarded("t-error", () => {
    drawTrellis(JSON.parse(trellisFromModel($("t-model").value, $("t-tie").value)));
  });
}

function drawCurve(grid, probs, dc) {
  const w = 480, h = 160, pad = 30;
  const lo = grid[0], hi = grid[grid.length - 1];
  const sx = (v) => pad + ((v - lo) / (hi - lo)) * (w - 2 * pad);
  const sy = (p) => h - pad - p * (h - 2 * pad);
  const svg = el("svg", { width: w, height: h });
  svg.append(el("line", { x1: pad, y1: sy(0), x2: w - pad, y2: sy(0), stroke: "#999" }));
  svg.append(el("line", { x1: sx(dc), y1: sy(0), x2: sx(dc), y2: sy(1), stroke: "#d88", "stroke-dasharray": "3 3" }));
  const points = grid.map((g, i) => `${sx(g)},${sy(probs[i])}`).join(" ");
  svg.append(el("polyline", { points, fill: "none", stroke: "#2255cc", "stroke-width": 2 }));
  grid.forEach((g, i) => svg.append(el("circle", { cx: sx(g), cy: sy(probs[i]), r: 3, fill: "#2255cc" })));
  svg.append(el("text", { x: pad, y: 14, "font-size": 11 }, "P(yield | distance)"));
  svg.append(el("text", { x: w - pad, y: h - 8, "font-size": 11, "text-anchor": "end" }, "distance (m)"));
  $("y-curve").replaceChildren(svg);
}

function runYield() {
  guarded("y-error", () => {
    const request = {
      n: Number($("y-n").value),
      beta: Number($("y-beta").value),
      d_c: Number($("y-dc").value),
      c_missed: Number($("y-missed").value),
      c_danger: Number($("y-danger").value),
      shift_prob: Number($("y-shift").value),
      planner: $("y-planner").value,
    };
    const view = JSON.parse(yieldPolicy(JSON.stringify(request)));
    drawCurve(view.grid, view.yield_prob, request.d_c);

    const table = document.createElement("table");
    table.className = "policy";
    const head = table.insertRow();
    head.append(Object.assign(document.createElement("th"), { textContent: "round \\ distance" }));
    for (const g of view.grid) head.append(Object.assign(document.createElement("th"), { textContent: g }));
    view.policy.forEach((row, k) => {
      const tr = table.insertRow();
      tr.append(Object.assign(document.createElement("th"), { textContent: k + 1 }));
      row.forEach((a, x) => {
        const td = tr.insertCell();
        td.textContent = a === "yield" ? "Y" : "N";
        td.className = a + (a !== view.myopic[k][x] ? " differs" : "");
        td.title = `V*=${view.v_star[k][x]}, myopic ${view.myopic[k][x]}`;
      });
    });
    $("y-table").replaceChildren(table);
    $("y-summary").textContent =
      `Y = predict yield, N = predict not yield; outlined cells differ from the myopic prediction. ` +
      `Expected loss: optimal ${view.min_loss}, myopic ${view.myopic_loss}.`;
  });
}

function runMonteCarlo() {
  guarded("m-error", () => {
    const view = JSON.parse(monteCarlo(
      $("m-example").value,
      Number($("m-n").value),
      $("m-strategy").value,
      Number($("m-rollouts").value),
      Number($("m-seed").value),
    ));
    const verdict = Math.abs(view.z) <= 3 ? "within" : "outside";
    $("m-result").textContent =
      `exact ${view.exact}; simulated ${view.mean} ± ${view.std_error} (${view.rollouts} rollouts, seed ${view.seed}); ` +
      `z = ${view.z.toFixed(2)}, ${verdict} 3 standard errors.`;
  });
}

await init();
$("t-run").addEventListener("click", runTrellis);
$("t-run-model").addEventListener("click", runTrellisModel);
$("m-run").addEventListener("click", runMonteCarlo);
for (const input of document.querySelectorAll("fieldset input, fieldset select")) {
  if (input.id.startsWith("y-")) input.addEventListener("change", runYield);
}
runTrellis();
runYield();
