import init, { tradeoff, encode, decomposeScenario } from "./pkg/shuffle_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function show(out, f) {
  try {
    out.innerHTML = f();
  } catch (e) {
    out.innerHTML = `<p class="error">${e}</p>`;
  }
}

function table(head, rows, rowClass = () => "") {
  const th = head.map((h) => `<th>${h}</th>`).join("");
  const tr = rows.map((r, i) => `<tr class="${rowClass(i)}">${r.map((c) => `<td>${c}</td>`).join("")}</tr>`);
  return `<table><tr>${th}</tr>${tr.join("")}</table>`;
}

function runTradeoff() {
  show($("t-out"), () => {
    const r = JSON.parse(tradeoff(num("t-k"), num("t-gamma")));
    const rows = r.points.map((p) => [p.s, p.load, p.universal]);
    return r.svg + table(["S", "load", "one cycle"], rows);
  });
}

function runEncode() {
  show($("e-out"), () => {
    const r = JSON.parse(encode(num("e-shat"), $("e-next").value));
    const cycles = r.cycles.map((c) => `(${c.join(" ")})`).join(" ");
    const rows = r.messages.map((m) => [`{${m.delta.join(",")}}`, m.terms.join(" ⊕ ")]);
    return (
      `<p>cycles ${cycles}; sent ${r.sent} of ${r.messages.length}; load ${r.load} (one cycle: ${r.universal}); ` +
      `all workers decode: ${r.verified}</p>` +
      table(["Δ", "sub-message"], rows, (i) => (r.messages[i].dropped ? "dropped" : ""))
    );
  });
}

function runDecompose() {
  show($("d-out"), () => {
    const r = JSON.parse(decomposeScenario($("d-scenario").value, num("d-budget"), BigInt(num("d-seed"))));
    const rows = r.subgraphs.map((edges, i) => [
      i + 1,
      r.gammas[i],
      edges.map((e) => `${e.from}→${e.to} (file ${e.file})`).join(", "),
    ]);
    return (
      `<p>load ${r.load} (first matching: ${r.first_load}, worst case: ${r.worst}); verified: ${r.verified}</p>` +
      table(["subgraph", "cycles", "edges"], rows)
    );
  });
}

await init();
$("t-run").addEventListener("click", runTradeoff);
$("e-run").addEventListener("click", runEncode);
$("d-run").addEventListener("click", runDecompose);
runTradeoff();
runEncode();
runDecompose();
