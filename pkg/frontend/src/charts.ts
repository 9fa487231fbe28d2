// Rolling strip charts for the configuration-error and position traces.
// The ring buffer is plain logic; drawing targets a 2D canvas.

export interface SeriesStyle {
  label: string;
  color: string;
}

export class RollingSeries {
  private ts: number[] = [];
  private vs: number[] = [];

  constructor(readonly windowS: number = 30) {}

  push(t: number, v: number): void {
    if (!Number.isFinite(t) || !Number.isFinite(v)) return;
    const n = this.ts.length;
    if (n > 0 && t < this.ts[n - 1]) {
      // time went backwards (sim reset): start the window over
      this.ts = [];
      this.vs = [];
    }
    this.ts.push(t);
    this.vs.push(v);
    const cutoff = t - this.windowS;
    let drop = 0;
    while (drop < this.ts.length && this.ts[drop] < cutoff) drop++;
    if (drop > 0) {
      this.ts.splice(0, drop);
      this.vs.splice(0, drop);
    }
  }

  get length(): number {
    return this.ts.length;
  }

  latest(): number | null {
    return this.vs.length ? this.vs[this.vs.length - 1] : null;
  }

  span(): { t0: number; t1: number } {
    if (!this.ts.length) return { t0: 0, t1: 1 };
    return { t0: this.ts[0], t1: this.ts[this.ts.length - 1] };
  }

  points(): Array<[number, number]> {
    return this.ts.map((t, i) => [t, this.vs[i]]);
  }

  valueRange(): { lo: number; hi: number } {
    if (!this.vs.length) return { lo: 0, hi: 1 };
    let lo = Infinity;
    let hi = -Infinity;
    for (const v of this.vs) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    if (hi - lo < 1e-9) hi = lo + 1e-9;
    return { lo, hi };
  }
}

export class StripChart {
  private series: RollingSeries[] = [];
  private styles: SeriesStyle[] = [];

  constructor(private readonly canvas: HTMLCanvasElement,
              readonly title: string,
              readonly windowS: number = 30,
              private readonly fixedRange?: { lo: number; hi: number }) {}

  addSeries(style: SeriesStyle): RollingSeries {
    const s = new RollingSeries(this.windowS);
    this.series.push(s);
    this.styles.push(style);
    return s;
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width: w, height: h } = this.canvas;
    ctx.fillStyle = "#101418";
    ctx.fillRect(0, 0, w, h);

    let lo = Infinity;
    let hi = -Infinity;
    let t1 = -Infinity;
    for (const s of this.series) {
      const r = this.fixedRange ?? s.valueRange();
      lo = Math.min(lo, r.lo);
      hi = Math.max(hi, r.hi);
      t1 = Math.max(t1, s.span().t1);
    }
    if (!Number.isFinite(t1)) {
      lo = 0;
      hi = 1;
      t1 = 0;
    }
    if (hi - lo < 1e-9) hi = lo + 1e-9;
    const t0 = t1 - this.windowS;

    ctx.strokeStyle = "#2a3238";
    ctx.beginPath();
    for (let g = 0; g <= 4; g++) {
      const y = (g / 4) * (h - 18) + 4;
      ctx.moveTo(0, y);
      ctx.lineTo(w, y);
    }
    ctx.stroke();

    this.series.forEach((s, i) => {
      ctx.strokeStyle = this.styles[i].color;
      ctx.beginPath();
      let started = false;
      for (const [t, v] of s.points()) {
        const x = ((t - t0) / this.windowS) * w;
        const y = h - 14 - ((v - lo) / (hi - lo)) * (h - 18);
        if (started) ctx.lineTo(x, y);
        else {
          ctx.moveTo(x, y);
          started = true;
        }
      }
      ctx.stroke();
    });

    ctx.fillStyle = "#c8d2da";
    ctx.font = "11px monospace";
    const labels = this.styles
      .map((st, i) => `${st.label}=${(this.series[i].latest() ?? 0).toFixed(3)}`)
      .join("  ");
    ctx.fillText(`${this.title}  ${labels}`, 6, h - 4);
    ctx.fillText(hi.toPrecision(3), 6, 12);
  }
}
