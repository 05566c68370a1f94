import init, { median, chase, growth } from "./pkg/mobsrv_demo.js";

const $ = (id) => document.getElementById(id);

// Maps world coordinates onto a canvas, keeping the aspect ratio.
function viewport(canvas, points) {
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const pad = 20;
  const span = Math.max(x1 - x0, y1 - y0, 1e-9);
  const scale = Math.min(canvas.width - 2 * pad, canvas.height - 2 * pad) / span;
  return (p) => [pad + (p[0] - x0) * scale, canvas.height - pad - (p[1] - y0) * scale];
}

function dot(ctx, [x, y], r, color) {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fill();
}

function path(ctx, pts, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
}

function setupMedian() {
  const canvas = $("median-canvas");
  const ctx = canvas.getContext("2d");
  let points = [];
  function draw() {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    points.forEach((p) => dot(ctx, p, 4, "#555"));
    if (points.length === 0) {
      $("median-out").textContent = "";
      return;
    }
    const v = JSON.parse(median(new Float64Array(points.flat())));
    const [mx, my] = v.median;
    ctx.strokeStyle = "#c33";
    ctx.beginPath();
    ctx.moveTo(mx - 8, my - 8); ctx.lineTo(mx + 8, my + 8);
    ctx.moveTo(mx + 8, my - 8); ctx.lineTo(mx - 8, my + 8);
    ctx.stroke();
    $("median-out").textContent =
      `median (${mx.toFixed(2)}, ${my.toFixed(2)})  sum of distances ${v.objective.toFixed(2)}  iterations ${v.iterations}`;
  }
  canvas.addEventListener("click", (e) => {
    if (e.shiftKey) {
      points = [];
    } else {
      const r = canvas.getBoundingClientRect();
      points.push([e.clientX - r.left, e.clientY - r.top]);
    }
    draw();
  });
}

function runChase() {
  const canvas = $("chase-canvas");
  const ctx = canvas.getContext("2d");
  try {
    const v = JSON.parse(chase(+$("chase-seed").value, +$("chase-steps").value,
      +$("chase-delta").value, +$("chase-d").value));
    const all = v.online.concat(v.offline, v.requests.flat());
    const map = viewport(canvas, all);
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    v.requests.flat().forEach((p) => dot(ctx, map(p), 2, "#999"));
    path(ctx, v.offline.map(map), "#36c");
    path(ctx, v.online.map(map), "#c33");
    const ratio = v.ratio === null ? "inf" : v.ratio.toFixed(3);
    $("chase-out").textContent =
      `online ${v.online_cost.toFixed(2)}  offline ${v.offline_cost.toFixed(2)}  ratio ${ratio}`;
  } catch (err) {
    $("chase-out").textContent = `error: ${err}`;
  }
}

function runGrowth() {
  const canvas = $("growth-canvas");
  const ctx = canvas.getContext("2d");
  try {
    const v = JSON.parse(growth(+$("growth-delta").value, +$("growth-max").value));
    const pts = v.points.filter((p) => p.ratio !== null)
      .map((p) => [Math.log10(p.steps), Math.log10(p.ratio)]);
    const map = viewport(canvas, pts.concat([[pts[0][0], 0]]));
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    path(ctx, pts.map(map), "#c33");
    pts.forEach((p) => dot(ctx, map(p), 4, "#c33"));
    const rows = v.points.map((p) =>
      `T=${String(p.steps).padStart(5)}  ratio ${p.ratio === null ? "inf" : p.ratio.toFixed(3)}`);
    const exp = v.exponent === null ? "n/a" : v.exponent.toFixed(3);
    $("growth-out").textContent = rows.join("\n") + `\nlog-log slope ${exp}`;
  } catch (err) {
    $("growth-out").textContent = `error: ${err}`;
  }
}

await init();
$("status").textContent = "";
setupMedian();
$("chase-run").addEventListener("click", runChase);
$("growth-run").addEventListener("click", runGrowth);
runChase();
