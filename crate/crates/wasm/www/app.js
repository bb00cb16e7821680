import init, { q_marginals, estimate, compare } from "./pkg/qftgi_wasm.js";

const $ = (id) => document.getElementById(id);

function fail(el, e) {
  el.innerHTML = "";
  const p = document.createElement("span");
  p.className = "err";
  p.textContent = String(e.message ?? e);
  el.appendChild(p);
}

function drawBars(values) {
  const bars = $("q-bars");
  const axis = $("q-axis");
  bars.innerHTML = "";
  axis.innerHTML = "";
  values.forEach((p, k) => {
    const b = document.createElement("div");
    b.className = "bar";
    b.style.height = `${Math.max(0, p) * 100}%`;
    const label = document.createElement("span");
    label.textContent = p < 1e-12 ? "0" : p.toFixed(3);
    b.appendChild(label);
    bars.appendChild(b);
    const a = document.createElement("div");
    a.textContent = `Q=${k}`;
    axis.appendChild(a);
  });
}

function runMarginals() {
  try {
    const r = JSON.parse(q_marginals($("regs").value));
    drawBars(r.analytic);
    const c = r.coefficients
      ? r.coefficients.divisors.map((t, i) => `c_${t}=${r.coefficients.coefficients[i].toFixed(3)}`).join(", ")
      : "";
    const check = r.bruteforce
      ? `max |closed form - permanent sum| = ${Math.max(...r.analytic.map((x, i) => Math.abs(x - r.bruteforce[i]))).toExponential(2)}`
      : "permanent sum skipped for n > 7";
    $("q-info").textContent =
      `n=${r.n}, period t=${r.period}, P(Q≠0)=${r.p_nonzero.toFixed(6)} (1-1/n = ${(1 - 1 / r.n).toFixed(6)}). ${c}. ${check}`;
  } catch (e) {
    fail($("q-info"), e);
  }
}

function runEstimate() {
  try {
    const r = JSON.parse(
      estimate(Number($("e-n").value), Number($("e-c1").value), BigInt($("e-shots").value), BigInt($("e-seed").value)),
    );
    const e = r.estimate;
    $("e-info").textContent =
      `estimated c1 = ${e.c1.toFixed(4)} ± ${e.stderr.toFixed(4)} (${e.method}, ${e.shots} shots; true ${r.true_c1})`;
    $("e-json").textContent = JSON.stringify(r.tally, null, 1);
  } catch (e) {
    fail($("e-info"), e);
  }
}

function plot(rows) {
  const cv = $("c-plot");
  const g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  const pad = 40;
  const w = cv.width - 2 * pad;
  const h = cv.height - 2 * pad;
  const ys = rows.flatMap((r) => [r.qft_shots, r.ci_shots_f64]).map(Math.log10);
  const ymin = Math.floor(Math.min(...ys));
  const ymax = Math.ceil(Math.max(...ys));
  const nmin = rows[0].n;
  const nmax = rows[rows.length - 1].n;
  const x = (n) => pad + ((n - nmin) / Math.max(1, nmax - nmin)) * w;
  const y = (v) => pad + h - ((Math.log10(v) - ymin) / Math.max(1, ymax - ymin)) * h;
  g.strokeStyle = "#999";
  g.fillStyle = "#444";
  g.font = "11px sans-serif";
  for (let d = ymin; d <= ymax; d += Math.max(1, Math.round((ymax - ymin) / 6))) {
    g.fillText(`1e${d}`, 2, y(10 ** d) + 4);
    g.beginPath();
    g.moveTo(pad, y(10 ** d));
    g.lineTo(pad + w, y(10 ** d));
    g.stroke();
  }
  const series = [
    ["#3b6ea5", (r) => r.qft_shots, "QFT"],
    ["#c0504d", (r) => r.ci_shots_f64, "CI"],
  ];
  series.forEach(([color, f, name], i) => {
    g.strokeStyle = color;
    g.fillStyle = color;
    g.beginPath();
    rows.forEach((r, j) => (j ? g.lineTo(x(r.n), y(f(r))) : g.moveTo(x(r.n), y(f(r)))));
    g.stroke();
    rows.filter((r) => r.prime).forEach((r) => g.fillRect(x(r.n) - 2, y(f(r)) - 2, 4, 4));
    g.fillText(name, pad + w - 40, pad + 12 + 14 * i);
  });
}

function runCompare() {
  try {
    const rows = JSON.parse(compare(Number($("c-n").value), Number($("c-eps").value), Number($("c-delta").value)));
    plot(rows);
    const t = document.createElement("table");
    t.innerHTML = "<tr><th>n</th><th>prime</th><th>QFT shots</th><th>CI shots</th><th>CI / QFT</th></tr>";
    for (const r of rows) {
      const tr = document.createElement("tr");
      if (r.prime) tr.className = "prime";
      for (const v of [r.n, r.prime ? "yes" : "", r.qft_shots, r.ci_shots, r.ratio.toExponential(2)]) {
        const td = document.createElement("td");
        td.textContent = v;
        tr.appendChild(td);
      }
      t.appendChild(tr);
    }
    $("c-table").replaceChildren(t);
  } catch (e) {
    fail($("c-table"), e);
  }
}

await init();
$("q-go").onclick = runMarginals;
$("e-go").onclick = runEstimate;
$("c-go").onclick = runCompare;
runMarginals();
runCompare();
