import init, { residualSlice, treeProfile, growthCurve } from "./pkg/liouville_web.js";

const num = (box, name) => Number(box.querySelector(`[name=${name}]`).value);

function wire(id, run) {
  const box = document.getElementById(id);
  const out = box.querySelector(".out");
  box.querySelector("button").onclick = () => {
    try {
      out.textContent = run(box, box.querySelector("canvas"));
    } catch (e) {
      out.textContent = `error: ${e.message ?? e}`;
    }
  };
}

// Log-scale line plot; each series is [values, colour]. Nonpositive values break the line.
function plot(canvas, xs, series) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const all = series.flatMap(([ys]) => ys).filter((y) => y > 0);
  if (!all.length) return;
  const lo = Math.log(Math.min(...all)), hi = Math.log(Math.max(...all));
  const x0 = Math.log(Math.max(xs[0], 1)), x1 = Math.log(Math.max(xs[xs.length - 1], 2));
  const px = (x) => ((Math.log(Math.max(x, 1)) - x0) / (x1 - x0 || 1)) * (canvas.width - 20) + 10;
  const py = (y) => canvas.height - 10 - ((Math.log(y) - lo) / (hi - lo || 1)) * (canvas.height - 20);
  for (const [ys, colour] of series) {
    ctx.strokeStyle = colour;
    ctx.beginPath();
    let pen = false;
    ys.forEach((y, i) => {
      if (!(y > 0)) { pen = false; return; }
      pen ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y));
      pen = true;
    });
    ctx.stroke();
  }
}

await init();

wire("slice", (box, canvas) => {
  const r = JSON.parse(residualSlice(num(box, "dim"), num(box, "sigma"), num(box, "delta"), num(box, "shift"), num(box, "half")));
  const side = 2 * r.half_width + 1, cell = canvas.width / side;
  const ctx = canvas.getContext("2d");
  const scale = Math.max(...r.values.map(Math.abs));
  r.values.forEach((v, i) => {
    const t = Math.sqrt(Math.abs(v) / scale);
    ctx.fillStyle = v > 0 ? `rgb(255,${255 * (1 - t)},${255 * (1 - t)})` : `rgb(${255 * (1 - t)},${255 * (1 - t)},255)`;
    ctx.fillRect((i % side) * cell, (side - 1 - Math.floor(i / side)) * cell, cell + 0.5, cell + 0.5);
  });
  return `max residual ${r.max.toExponential(4)} at (${r.argmax})${r.critical ? "" : "  (σ not above N/(N-2))"}`;
});

wire("profile", (box, canvas) => {
  const r = JSON.parse(treeProfile(num(box, "degree"), num(box, "sigma"), num(box, "epsilon"), num(box, "n0"), num(box, "u0"), num(box, "depth")));
  plot(canvas, r.shot.map((_, n) => n + 1), [[r.closed_form, "#999"], [r.shot, "#c33"]]);
  return `stop: ${r.stop.reason} at level ${r.stop.level}; last value ${r.shot[r.shot.length - 1].toExponential(4)}`;
});

wire("growth", (box, canvas) => {
  const radii = new Float64Array(box.querySelector("[name=radii]").value.split(",").map(Number));
  const family = box.querySelector("[name=family]").value;
  const r = JSON.parse(growthCurve(family, num(box, "param"), num(box, "sigma"), radii));
  plot(canvas, r.rows.map((row) => row.R), [[r.rows.map((row) => row.W), "#36c"]]);
  const rows = r.rows.map((row) => `${row.R}\t${row.W.toExponential(4)}`).join("\n");
  return `${rows}\nslope ${r.slope.toFixed(4)} vs target ${r.target_exponent.toFixed(4)}: ${r.verdict}`;
});
