export type HitSource = "standard" | "semantic";

/** One search result as delivered by the server's `hit` events. */
export interface SearchHit {
  item_id: string;
  name: string;
  kind: string | null;
  /** Cosine similarity; null for standard (substring) hits. */
  score: number | null;
  source: HitSource;
}

/** Payload of the terminal `done` event: the merged final ranking. */
export interface DonePayload {
  results: SearchHit[];
  warning?: string;
}

export interface SearchHandlers {
  onHit: (hit: SearchHit) => void;
  onDone: (done: DonePayload) => void;
  onError: (error: Error) => void;
}
