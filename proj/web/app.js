'use strict';

const canvas = document.getElementById('plot');
const ctx = canvas.getContext('2d');
const banner = document.getElementById('banner');
const tooltip = document.getElementById('tooltip');

let result = null;
let view = null;  // {xmin, xmax, ymin, ymax}
let drag = null;
let inflight = null;

function showBanner(text) { banner.textContent = text; banner.hidden = false; }

function fit(points) {
  const xs = points.map(p => p.x), ys = points.map(p => p.y);
  let xmin = Math.min(...xs), xmax = Math.max(...xs);
  let ymin = Math.min(...ys), ymax = Math.max(...ys);
  const mx = Math.max((xmax - xmin) * 0.05, 1e-6), my = Math.max((ymax - ymin) * 0.05, 1e-6);
  return {xmin: xmin - mx, xmax: xmax + mx, ymin: ymin - my, ymax: ymax + my};
}

function toScreen(x, y) {
  return [(x - view.xmin) / (view.xmax - view.xmin) * canvas.width,
          (view.ymax - y) / (view.ymax - view.ymin) * canvas.height];
}

function toData(sx, sy) {
  return [view.xmin + sx / canvas.width * (view.xmax - view.xmin),
          view.ymax - sy / canvas.height * (view.ymax - view.ymin)];
}

function label(tag, isQuery) {
  return !isQuery && tag.length > 24 ? tag.slice(0, 23) + '…' : tag;
}

function draw() {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!result) return;
  ctx.font = '12px sans-serif';
  const points = [...result.neighbors.map(n => ({...n, q: false})),
                  {tag: result.query, x: result.x, y: result.y, q: true}];
  for (const p of points) {
    const [sx, sy] = toScreen(p.x, p.y);
    ctx.fillStyle = '#1f77b4';
    ctx.beginPath(); ctx.arc(sx, sy, 3, 0, 2 * Math.PI); ctx.fill();
    if (p.q) {
      ctx.strokeStyle = 'red'; ctx.lineWidth = 2;
      ctx.beginPath(); ctx.arc(sx, sy, 14, 0, 2 * Math.PI); ctx.stroke();
    }
    ctx.fillStyle = p.q ? '#b00' : '#333';
    ctx.fillText(label(p.tag, p.q), sx + 5, sy - 5);
  }
  if (drag && drag.mode === 'box') {
    ctx.strokeStyle = '#555'; ctx.lineWidth = 1;
    ctx.strokeRect(drag.x0, drag.y0, drag.x1 - drag.x0, drag.y1 - drag.y0);
  }
}

async function submitQuery(tag) {
  if (inflight) inflight.abort();
  inflight = new AbortController();
  try {
    const res = await fetch('/api/neighbors?tag=' + encodeURIComponent(tag), {signal: inflight.signal});
    if (res.status === 404) { showBanner('unknown hashtag: ' + tag); return; }
    if (!res.ok) { showBanner('query failed (' + res.status + ')'); return; }
    const doc = await res.json();
    if (!doc || !Array.isArray(doc.neighbors)) { showBanner('malformed response'); return; }
    banner.hidden = true;
    result = doc;
    view = fit([...doc.neighbors, doc]);
    draw();
  } catch (e) {
    if (e.name !== 'AbortError') showBanner('network error, please retry');
  }
}

document.getElementById('search').addEventListener('submit', ev => {
  ev.preventDefault();
  const tag = document.getElementById('tag').value.trim();
  if (tag) submitQuery(tag);
});

canvas.addEventListener('mousedown', ev => {
  if (!result) return;
  drag = {mode: ev.shiftKey ? 'pan' : 'box', x0: ev.offsetX, y0: ev.offsetY, x1: ev.offsetX, y1: ev.offsetY};
});

canvas.addEventListener('mousemove', ev => {
  if (drag) {
    if (drag.mode === 'pan') {
      const [ax, ay] = toData(drag.x1, drag.y1), [bx, by] = toData(ev.offsetX, ev.offsetY);
      view = {xmin: view.xmin - (bx - ax), xmax: view.xmax - (bx - ax),
              ymin: view.ymin - (by - ay), ymax: view.ymax - (by - ay)};
    }
    drag.x1 = ev.offsetX; drag.y1 = ev.offsetY;
    draw();
    return;
  }
  if (!result) return;
  const hit = result.neighbors.find(n => {
    const [sx, sy] = toScreen(n.x, n.y);
    return Math.hypot(sx - ev.offsetX, sy - ev.offsetY) < 5;
  });
  tooltip.hidden = !hit;
  if (hit) {
    tooltip.textContent = hit.tag + '  ' + hit.similarity.toFixed(3);
    tooltip.style.left = ev.clientX + 12 + 'px';
    tooltip.style.top = ev.clientY + 12 + 'px';
  }
});

canvas.addEventListener('mouseup', () => {
  if (drag && drag.mode === 'box') {
    const w = Math.abs(drag.x1 - drag.x0), h = Math.abs(drag.y1 - drag.y0);
    if (w * h > 16) {
      const [x0, y0] = toData(Math.min(drag.x0, drag.x1), Math.max(drag.y0, drag.y1));
      const [x1, y1] = toData(Math.max(drag.x0, drag.x1), Math.min(drag.y0, drag.y1));
      const aspect = canvas.width / canvas.height;
      let dx = x1 - x0, dy = y1 - y0;
      if (dx / dy > aspect) dy = dx / aspect; else dx = dy * aspect;
      const cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
      view = {xmin: cx - dx / 2, xmax: cx + dx / 2, ymin: cy - dy / 2, ymax: cy + dy / 2};
    }
  }
  drag = null;
  draw();
});

canvas.addEventListener('dblclick', () => {
  if (result) { view = fit([...result.neighbors, result]); draw(); }
});

window.addEventListener('resize', draw);
