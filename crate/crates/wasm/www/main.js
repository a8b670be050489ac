import init, { simulate_and_restore, haze, voxel_strip } from "./pkg/evdesnow_wasm.js";

const SIZE = 96;
const ZOOM = 3;
const $ = (id) => document.getElementById(id);

function draw(canvas, rgba, width, height) {
  canvas.width = width;
  canvas.height = height;
  canvas.style.width = `${width * ZOOM}px`;
  canvas.style.height = `${height * ZOOM}px`;
  const img = new ImageData(new Uint8ClampedArray(rgba), width, height);
  canvas.getContext("2d").putImageData(img, 0, 0);
}

function runRestore() {
  const demo = simulate_and_restore(
    SIZE,
    Number($("flakes").value),
    Number($("contrast").value),
    Number($("flow").value),
    BigInt($("seed").value),
  );
  const views = $("restore-views");
  views.replaceChildren();
  for (const [name, rgba] of [
    ["snowy", demo.snowy],
    ["restored", demo.restored],
    ["ground truth", demo.truth],
    ["mask", demo.mask],
  ]) {
    const fig = document.createElement("figure");
    const canvas = document.createElement("canvas");
    draw(canvas, rgba, SIZE, SIZE);
    const cap = document.createElement("figcaption");
    cap.textContent = name;
    fig.append(canvas, cap);
    views.append(fig);
  }
  $("restore-stats").textContent =
    `${demo.events} events, ${demo.streaks} streaks | ` +
    `PSNR ${demo.psnr_before.toFixed(2)} -> ${demo.psnr_after.toFixed(2)} dB | ` +
    `SSIM ${demo.ssim_before.toFixed(4)} -> ${demo.ssim_after.toFixed(4)}`;
  demo.free();
}

function runHaze() {
  draw($("haze"), haze(SIZE, Number($("atm").value), Number($("beta").value), 7n), SIZE, SIZE);
}

function runVoxel() {
  const bins = Number($("bins").value);
  const size = 48;
  draw($("voxel"), voxel_strip(size, bins, Number($("speed").value), 3n), size * bins, size);
}

await init();
$("run").addEventListener("click", runRestore);
for (const id of ["atm", "beta"]) $(id).addEventListener("input", runHaze);
for (const id of ["bins", "speed"]) $(id).addEventListener("input", runVoxel);
runRestore();
runHaze();
runVoxel();
