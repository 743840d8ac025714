import init, { gain_ratios, oob_curve, speedup_curve } from "./pkg/prf_wasm_demo.js";

const TENNIS_CSV = `outlook,temperature,humidity,windy,play
sunny,hot,high,false,no
sunny,hot,high,true,no
overcast,hot,high,false,yes
rainy,mild,high,false,yes
rainy,cool,normal,false,yes
rainy,cool,normal,true,no
overcast,cool,normal,true,yes
sunny,mild,high,false,no
sunny,cool,normal,false,yes
rainy,mild,normal,false,yes
sunny,mild,normal,true,yes
overcast,mild,high,true,yes
overcast,hot,normal,false,yes
rainy,mild,high,true,no
`;

const TENNIS_SCHEMA = JSON.stringify({
  features: [
    { name: "outlook", kind: "categorical", values: ["sunny", "overcast", "rainy"] },
    { name: "temperature", kind: "categorical", values: ["hot", "mild", "cool"] },
    { name: "humidity", kind: "categorical", values: ["high", "normal"] },
    { name: "windy", kind: "categorical", values: ["false", "true"] },
  ],
  target: { name: "play", kind: "categorical", classes: ["no", "yes"] },
}, null, 2);

const $ = (id) => document.getElementById(id);
const fmt = (x) => (x === null ? "n/a" : x.toFixed(4));

function inputs() {
  return {
    csv: $("csv").value,
    schema: $("schema").value,
    trees: Math.max(1, parseInt($("trees").value, 10) || 1),
    seed: Math.max(0, parseInt($("seed").value, 10) || 0),
  };
}

function guarded(fn) {
  return () => {
    $("error").textContent = "";
    try {
      fn();
    } catch (e) {
      $("error").textContent = String(e);
    }
  };
}

function table(headers, rows) {
  const head = `<tr>${headers.map((h) => `<th>${h}</th>`).join("")}</tr>`;
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table>${head}${body}</table>`;
}

// Line chart of one or more series over shared x values.
function chart(xs, series, { width = 560, height = 260, yMax } = {}) {
  const pad = 36;
  const ys = series.flatMap((s) => s.values.filter((v) => v !== null));
  const top = yMax ?? Math.max(...ys, 1e-9);
  const xMin = Math.min(...xs), xMax = Math.max(...xs);
  const sx = (x) => pad + ((x - xMin) / (xMax - xMin || 1)) * (width - 2 * pad);
  const sy = (y) => height - pad - (y / top) * (height - 2 * pad);
  const lines = series.map((s) => {
    const pts = xs.map((x, i) => (s.values[i] === null ? null : `${sx(x)},${sy(s.values[i])}`)).filter(Boolean);
    return `<polyline fill="none" stroke="${s.color}" stroke-width="2" points="${pts.join(" ")}"/>`;
  });
  const legend = series.map((s, i) =>
    `<text x="${pad + 8}" y="${pad + 14 * i}" fill="${s.color}">${s.name}</text>`);
  const axes = `<line x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}" stroke="#888"/>
    <line x1="${pad}" y1="${pad / 2}" x2="${pad}" y2="${height - pad}" stroke="#888"/>
    <text x="${width - pad}" y="${height - 8}" text-anchor="end">${xMax}</text>
    <text x="${pad - 4}" y="${pad / 2 + 4}" text-anchor="end">${top.toFixed(2)}</text>`;
  return `<svg width="${width}" height="${height}">${axes}${lines.join("")}${legend.join("")}</svg>`;
}

function runGainRatios() {
  const { csv, schema } = inputs();
  const rows = JSON.parse(gain_ratios(csv, schema));
  $("gr-out").innerHTML = table(
    ["feature", "info gain", "split info", "gain ratio", "importance"],
    rows.map((r) => [r.feature, fmt(r.info_gain), fmt(r.split_info), fmt(r.gain_ratio), fmt(r.importance)]),
  );
}

function runOob() {
  const { csv, schema, trees, seed } = inputs();
  const points = JSON.parse(oob_curve(csv, schema, trees, seed));
  const xs = points.map((p) => p.trees);
  $("oob-out").innerHTML = chart(xs, [
    { name: "OOB-accuracy weights", color: "#1f77b4", values: points.map((p) => p.weighted) },
    { name: "equal weights", color: "#ff7f0e", values: points.map((p) => p.unweighted) },
  ]) + table(["trees", "weighted", "unweighted"], points.map((p) => [p.trees, fmt(p.weighted), fmt(p.unweighted)]));
}

function runSpeedup() {
  const { csv, schema, trees, seed } = inputs();
  const nodes = Math.max(1, parseInt($("nodes").value, 10) || 1);
  const rows = JSON.parse(speedup_curve(csv, schema, trees, seed, nodes, $("zero-comm").checked));
  const xs = rows.map((r) => r.nodes);
  $("speedup-out").innerHTML = chart(xs, [
    { name: "simulated", color: "#2ca02c", values: rows.map((r) => r.speedup) },
    { name: "linear", color: "#bbb", values: xs },
  ], { yMax: nodes }) + table(["nodes", "makespan (s)", "speedup"], rows.map((r) => [r.nodes, r.makespan.toExponential(3), r.speedup.toFixed(3)]));
}

await init();
$("csv").value = TENNIS_CSV;
$("schema").value = TENNIS_SCHEMA;
$("run-gr").addEventListener("click", guarded(runGainRatios));
$("run-oob").addEventListener("click", guarded(runOob));
$("run-speedup").addEventListener("click", guarded(runSpeedup));
