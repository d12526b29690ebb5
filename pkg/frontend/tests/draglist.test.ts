import { describe, expect, it } from "vitest";

import { DragList } from "../src/draglist.js";
import { isCompletePermutation } from "../src/order.js";

const CARD_HEIGHT = 100;

/** Synthetic geometry: each card occupies a 100px slot in display order. */
function displayMeasure(el: HTMLElement) {
  const index = Array.prototype.indexOf.call(el.parentElement!.children, el);
  return { top: index * CARD_HEIGHT, height: CARD_HEIGHT };
}

function buildList(n: number) {
  const container = document.createElement("div");
  document.body.appendChild(container);
  for (let i = 0; i < n; i++) {
    const card = document.createElement("div");
    card.textContent = `card ${i}`;
    container.appendChild(card);
  }
  const events: number[][] = [];
  const list = new DragList(container, (order) => events.push(order), displayMeasure);
  list.attach();
  return { container, list, events };
}

function pointer(type: string, clientY: number): Event {
  const ev = new MouseEvent(type, { clientY, bubbles: true });
  return ev;
}

/** Drag the card currently at `fromSlot` so it lands in `toSlot`. */
function dragBySlots(container: HTMLElement, fromSlot: number, toSlot: number) {
  const card = container.children[fromSlot] as HTMLElement;
  card.dispatchEvent(pointer("pointerdown", fromSlot * CARD_HEIGHT + 50));
  const targetY = toSlot * CARD_HEIGHT + (toSlot > fromSlot ? 80 : 20);
  container.dispatchEvent(pointer("pointermove", targetY));
  container.dispatchEvent(pointer("pointerup", targetY));
}

describe("DragList", () => {
  it("starts in identity order", () => {
    const { list } = buildList(5);
    expect(list.order).toEqual([0, 1, 2, 3, 4]);
  });

  it("reorders via the pointer pipeline", () => {
    const { container, list, events } = buildList(4);
    dragBySlots(container, 0, 3); // drag the first card to the bottom
    expect(list.order).toEqual([1, 2, 3, 0]);
    expect(events.at(-1)).toEqual([1, 2, 3, 0]);
    dragBySlots(container, 2, 0); // then the card in slot 2 to the top
    expect(list.order).toEqual([3, 1, 2, 0]);
  });

  it("keeps the order a complete permutation through arbitrary drags", () => {
    const { container, list } = buildList(5);
    const moves: [number, number][] = [
      [0, 4], [2, 0], [4, 1], [3, 3], [1, 4], [0, 2],
    ];
    for (const [from, to] of moves) {
      dragBySlots(container, from, to);
      expect(isCompletePermutation(list.order, 5)).toBe(true);
    }
  });

  it("supports programmatic moves for the arrow buttons", () => {
    const { list, events } = buildList(3);
    list.move(2, -1);
    expect(list.order).toEqual([0, 2, 1]);
    list.move(0, 1);
    expect(list.order).toEqual([2, 0, 1]);
    expect(events.length).toBe(2);
  });

  it("ignores drags that start on buttons", () => {
    const { container, list } = buildList(3);
    const button = document.createElement("button");
    (container.children[0] as HTMLElement).appendChild(button);
    button.dispatchEvent(pointer("pointerdown", 10));
    container.dispatchEvent(pointer("pointermove", 250));
    container.dispatchEvent(pointer("pointerup", 250));
    expect(list.order).toEqual([0, 1, 2]);
  });
});
