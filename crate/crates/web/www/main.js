import init, { vectorizeRgba, smoothPolyline, fig3Width, fig3Height, fig3Merge } from "./pkg/vecraster_web.js";

const MAX_SIDE = 256;
const $ = (id) => document.getElementById(id);

function setStatus(el, text, isError = false) {
  el.textContent = text;
  el.classList.toggle("error", isError);
}

function errorText(e) {
  return e instanceof Error ? e.message : String(e);
}

// Vectorize an uploaded image.

let inputPixels = null;

function loadImage(file) {
  const img = new Image();
  img.onload = () => {
    const scale = Math.min(1, MAX_SIDE / Math.max(img.width, img.height));
    const w = Math.max(1, Math.round(img.width * scale));
    const h = Math.max(1, Math.round(img.height * scale));
    const canvas = $("vec-input");
    canvas.width = w;
    canvas.height = h;
    canvas.style.width = `${w * 2}px`;
    const ctx = canvas.getContext("2d");
    ctx.drawImage(img, 0, 0, w, h);
    inputPixels = { data: ctx.getImageData(0, 0, w, h).data, w, h };
    URL.revokeObjectURL(img.src);
    setStatus($("vec-status"), `${w}x${h} loaded`);
  };
  img.src = URL.createObjectURL(file);
}

function runVectorize() {
  const status = $("vec-status");
  if (!inputPixels) {
    setStatus(status, "Choose an image first.", true);
    return;
  }
  const { data, w, h } = inputPixels;
  setStatus(status, "Working...");
  setTimeout(() => {
    const t0 = performance.now();
    try {
      const svg = vectorizeRgba(
        new Uint8Array(data.buffer), w, h,
        $("vec-gain").value,
        Number($("vec-regions").value),
        Number($("vec-smooth").value),
        Number($("vec-tau").value),
        Number($("vec-iters").value),
      );
      const out = $("vec-output");
      out.innerHTML = svg;
      const el = out.querySelector("svg");
      el.setAttribute("width", w * 2);
      el.setAttribute("height", h * 2);
      const link = $("vec-download");
      if (link.href) URL.revokeObjectURL(link.href);
      link.href = URL.createObjectURL(new Blob([svg], { type: "image/svg+xml" }));
      link.hidden = false;
      const shapes = (svg.match(/<path /g) || []).length;
      setStatus(status, `${shapes} shapes in ${(performance.now() - t0).toFixed(0)} ms`);
    } catch (e) {
      setStatus(status, errorText(e), true);
    }
  }, 10);
}

// Smooth a drawn curve.

let stroke = [];
let drawing = false;

function drawPolyline(ctx, xy, color, closed) {
  if (xy.length < 4) return;
  ctx.strokeStyle = color;
  ctx.beginPath();
  ctx.moveTo(xy[0], xy[1]);
  for (let i = 2; i < xy.length; i += 2) ctx.lineTo(xy[i], xy[i + 1]);
  if (closed) ctx.closePath();
  ctx.stroke();
}

function redrawSmooth() {
  const canvas = $("sm-canvas");
  const ctx = canvas.getContext("2d");
  const closed = $("sm-closed").checked;
  const t = Number($("sm-time").value);
  $("sm-time-val").textContent = t;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.lineWidth = 1.5;
  drawPolyline(ctx, stroke, "#aaa", closed);
  if (drawing || stroke.length < 6) return;
  try {
    const out = smoothPolyline(new Float64Array(stroke), t, closed);
    drawPolyline(ctx, out, "#1565c0", closed);
    setStatus($("sm-status"), `${stroke.length / 2} input points, ${out.length / 2} output points`);
  } catch (e) {
    setStatus($("sm-status"), errorText(e), true);
  }
}

function canvasPoint(canvas, ev) {
  const r = canvas.getBoundingClientRect();
  return [ev.clientX - r.left, ev.clientY - r.top];
}

function setupSmoothing() {
  const canvas = $("sm-canvas");
  canvas.addEventListener("pointerdown", (ev) => {
    drawing = true;
    stroke = canvasPoint(canvas, ev);
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!drawing) return;
    const [x, y] = canvasPoint(canvas, ev);
    const n = stroke.length;
    if (Math.hypot(x - stroke[n - 2], y - stroke[n - 1]) >= 1) {
      stroke.push(x, y);
      redrawSmooth();
    }
  });
  canvas.addEventListener("pointerup", () => {
    drawing = false;
    redrawSmooth();
  });
  $("sm-time").addEventListener("input", redrawSmooth);
  $("sm-closed").addEventListener("change", redrawSmooth);
  $("sm-clear").addEventListener("click", () => {
    stroke = [];
    redrawSmooth();
  });
}

// Merge order on the built-in test image.

function paint(canvas, rgba, w, h) {
  canvas.width = w;
  canvas.height = h;
  canvas.style.width = `${w * 6}px`;
  canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), w, h), 0, 0);
}

function redrawMerge() {
  const w = fig3Width();
  const h = fig3Height();
  const n = Number($("mg-regions").value);
  $("mg-regions-val").textContent = n;
  try {
    paint($("mg-merged"), fig3Merge($("mg-gain").value, n), w, h);
    setStatus($("mg-status"), `Left: original. Right: merged to ${n} regions.`);
  } catch (e) {
    setStatus($("mg-status"), errorText(e), true);
  }
}

async function main() {
  await init();
  $("vec-file").addEventListener("change", (ev) => {
    if (ev.target.files.length) loadImage(ev.target.files[0]);
  });
  $("vec-run").addEventListener("click", runVectorize);
  setupSmoothing();
  paint($("mg-original"), fig3Merge("area", fig3Width() * fig3Height()), fig3Width(), fig3Height());
  $("mg-gain").addEventListener("change", redrawMerge);
  $("mg-regions").addEventListener("input", redrawMerge);
  redrawMerge();
}

main();
