// Console state: a pure reducer over service events. The console never
// simulates or translates anything itself; every number on screen comes
// from an event or a service response processed here.

import type { ConsoleEvent, StateEvent, TrailPoint } from "./types.js";

export const TRAIL_CAPACITY = 2000;

export interface ConsoleState {
  sessionId: string | null;
  status: string;
  latest: StateEvent | null;
  trail: TrailPoint[];
  embedding: number[];
  lastDescription: string | null;
  rewardCumulative: number;
  connection: "connecting" | "live" | "reconnecting" | "closed";
  switchPending: boolean;
}

export function initialState(): ConsoleState {
  return {
    sessionId: null,
    status: "paused",
    latest: null,
    trail: [],
    embedding: [],
    lastDescription: null,
    rewardCumulative: 0,
    connection: "connecting",
    switchPending: false,
  };
}

/** Apply one service event; returns the same object mutated (cheap). */
export function applyEvent(state: ConsoleState, event: ConsoleEvent): ConsoleState {
  switch (event.type) {
    case "snapshot":
    case "state": {
      const last = state.trail.length ? state.trail[state.trail.length - 1] : null;
      if (last !== null && event.t <= last.t) {
        // duplicate or out-of-order delivery after a reconnect: drop
        return state;
      }
      state.latest = event;
      state.rewardCumulative = event.reward_cumulative;
      state.embedding = event.embedding ?? state.embedding;
      state.lastDescription = event.last_description ?? state.lastDescription;
      if (event.status) state.status = event.status;
      state.trail.push({ t: event.t, x: event.x, y: event.y, switch: state.switchPending });
      state.switchPending = false;
      if (state.trail.length > TRAIL_CAPACITY) {
        state.trail.splice(0, state.trail.length - TRAIL_CAPACITY);
      }
      return state;
    }
    case "context":
      state.embedding = event.embedding;
      state.lastDescription = event.last_description;
      if (event.changed) state.switchPending = true;
      return state;
    case "control":
      state.status = event.verb === "resume" ? "running" : state.status;
      if (event.verb === "pause") state.status = "paused";
      if (event.verb === "delete") state.status = "done";
      return state;
    case "reset":
      state.trail = [];
      state.rewardCumulative = 0;
      state.latest = null;
      state.status = "paused";
      state.switchPending = false;
      return state;
    case "heartbeat":
      state.status = event.status;
      return state;
    case "done":
      state.status = "done";
      state.rewardCumulative = event.reward_cumulative;
      return state;
    default:
      return state;
  }
}

export interface BlockCell {
  property: string;
  level: string;
  active: boolean;
}

/** Split a 20-entry embedding into 4 labeled blocks of 5 cells. */
export function embeddingBlocks(
  embedding: number[],
  properties: readonly string[],
  levels: readonly string[],
): BlockCell[][] {
  const blocks: BlockCell[][] = [];
  for (let b = 0; b < properties.length; b++) {
    const cells: BlockCell[] = [];
    for (let i = 0; i < levels.length; i++) {
      cells.push({
        property: properties[b],
        level: levels[i],
        active: embedding[b * levels.length + i] === 1,
      });
    }
    blocks.push(cells);
  }
  return blocks;
}

/** Trajectory t values must never decrease except through a reset. */
export function trailIsMonotone(trail: TrailPoint[]): boolean {
  for (let i = 1; i < trail.length; i++) {
    if (trail[i].t <= trail[i - 1].t) return false;
  }
  return true;
}
