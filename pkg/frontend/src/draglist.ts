/** Pointer-driven drag-to-reorder list.
 *
 * The list keeps `order`: original item indices in current display order.
 * Geometry is read through an injectable `measure` so tests in a
 * headless DOM can drive the same pointer pipeline with synthetic rects.
 */

export interface RectLike {
  top: number;
  height: number;
}

export type MeasureFn = (el: HTMLElement) => RectLike;

export class DragList {
  order: number[] = [];
  private items: HTMLElement[] = [];
  private dragging: HTMLElement | null = null;
  private readonly measure: MeasureFn;

  constructor(
    private readonly container: HTMLElement,
    private readonly onReorder: (order: number[]) => void,
    measure?: MeasureFn,
  ) {
    this.measure = measure ?? ((el) => el.getBoundingClientRect());
  }

  /** Adopt the container's current children as draggable items. */
  attach(): void {
    this.items = Array.from(this.container.children) as HTMLElement[];
    this.order = this.items.map((_, i) => i);
    this.items.forEach((el, originalIndex) => {
      el.dataset.originalIndex = String(originalIndex);
      el.addEventListener("pointerdown", (ev) => this.onPointerDown(el, ev as PointerEvent));
    });
    this.container.addEventListener("pointermove", (ev) => this.onPointerMove(ev as PointerEvent));
    this.container.addEventListener("pointerup", () => this.onPointerUp());
    this.container.addEventListener("pointercancel", () => this.onPointerUp());
  }

  private onPointerDown(el: HTMLElement, ev: PointerEvent): void {
    if (ev.target instanceof HTMLElement && ev.target.closest("button, input, a")) return;
    this.dragging = el;
    el.classList.add("dragging");
    if (typeof el.setPointerCapture === "function" && ev.pointerId !== undefined) {
      try {
        el.setPointerCapture(ev.pointerId);
      } catch {
        /* headless DOMs may not implement capture */
      }
    }
    ev.preventDefault?.();
  }

  private onPointerMove(ev: PointerEvent): void {
    if (!this.dragging) return;
    const y = ev.clientY;
    const siblings = (Array.from(this.container.children) as HTMLElement[]).filter(
      (el) => el !== this.dragging,
    );
    let insertBefore: HTMLElement | null = null;
    for (const sib of siblings) {
      const rect = this.measure(sib);
      if (y < rect.top + rect.height / 2) {
        insertBefore = sib;
        break;
      }
    }
    if (insertBefore !== null) {
      this.container.insertBefore(this.dragging, insertBefore);
    } else {
      this.container.appendChild(this.dragging);
    }
  }

  private onPointerUp(): void {
    if (!this.dragging) return;
    this.dragging.classList.remove("dragging");
    this.dragging = null;
    this.syncOrder();
    this.onReorder(this.order.slice());
  }

  /** Programmatic move, used by the per-card arrow buttons. */
  move(displayIndex: number, direction: -1 | 1): void {
    const children = Array.from(this.container.children) as HTMLElement[];
    const target = displayIndex + direction;
    if (displayIndex < 0 || displayIndex >= children.length) return;
    if (target < 0 || target >= children.length) return;
    const el = children[displayIndex];
    const ref = direction === -1 ? children[target] : children[target].nextSibling;
    this.container.insertBefore(el, ref);
    this.syncOrder();
    this.onReorder(this.order.slice());
  }

  private syncOrder(): void {
    this.order = (Array.from(this.container.children) as HTMLElement[]).map((el) =>
      Number(el.dataset.originalIndex),
    );
  }
}
