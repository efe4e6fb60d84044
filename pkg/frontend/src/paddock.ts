// Canvas painting for the paddock: the pack as repeated shub sprites plus a
// numeric badge once the crowd stops being countable at a glance.

const SPRITE = 26;
const GAP = 6;
const MAX_SPRITES = 60;

function drawShub(ctx: CanvasRenderingContext2D, x: number, y: number): void {
  // body
  ctx.fillStyle = "#7c5cd6";
  ctx.beginPath();
  ctx.ellipse(x + 13, y + 16, 10, 8, 0, 0, Math.PI * 2);
  ctx.fill();
  // head
  ctx.beginPath();
  ctx.arc(x + 13, y + 7, 6, 0, Math.PI * 2);
  ctx.fill();
  // eyes
  ctx.fillStyle = "#fff";
  ctx.fillRect(x + 9, y + 5, 3, 3);
  ctx.fillRect(x + 15, y + 5, 3, 3);
}

export function drawPack(canvas: HTMLCanvasElement, packSize: number): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#2e7d32";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  const perRow = Math.max(1, Math.floor(canvas.width / (SPRITE + GAP)));
  const shown = Math.min(packSize, MAX_SPRITES);
  for (let i = 0; i < shown; i++) {
    const col = i % perRow;
    const row = Math.floor(i / perRow);
    drawShub(ctx, 8 + col * (SPRITE + GAP), 8 + row * (SPRITE + GAP));
  }
  if (packSize > shown) {
    ctx.fillStyle = "#fff";
    ctx.font = "bold 16px sans-serif";
    ctx.fillText(`+${packSize - shown} more`, 10, canvas.height - 12);
  }
}
