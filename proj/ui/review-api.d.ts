// Types for the review screen. The screen itself is not implemented here;
// these mirror docs/review_api.md.

export type Decision = "accepted" | "rejected";

export type Reason =
  | "spaced"
  | "low-objectness"
  | "low-correlation"
  | "low-avg-objectness"
  | "far-from-prediction"
  | "temporal-coverage";

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface SessionDescriptor {
  session_id: string;
  iteration: number;
  videos: string[];
  queued: number;
  empty: boolean;
}

export interface TrackletSummary {
  tracklet_key: string;
  video_id: string;
  birth_frame: number;
  death_frame: number;
  length: number;
  measured: number;
  suppressed: number;
}

export interface ReviewSample {
  sample_id: string;
  tracklet_key: string;
  instance_index: number;
  frame_index: number;
  box: Box;
  reasons: Reason[];
  crop_ref: string;
  crop_url: string;
}

export interface NextTracklet {
  session_id: string;
  done: boolean;
  n: number;
  tracklet?: TrackletSummary;
  samples?: ReviewSample[];
}

export interface Click {
  sample_id: string;
  decision: Decision;
}

export interface DecisionSummary {
  tracklet_key: string;
  accepted: number;
  rejected: number;
  suppressed: number;
  click_count: number;
}

export interface Progress {
  session_id: string;
  done: number;
  total: number;
  clicks: number;
  annotated: number;
  closed: boolean;
}

export interface ApiError {
  error: "invalid-argument" | "not-found" | "conflict" | "incomplete-review" | "internal";
  message: string;
  prior?: DecisionSummary;
}

export interface SampleCard {
  sample: ReviewSample;
  clicked?: Decision;
  preview?: Decision;
}

export interface ScreenModel {
  session: SessionDescriptor;
  tracklet: TrackletSummary;
  cards: SampleCard[]; // temporal order
  clicks: Click[];
  progress: Progress;
}

/** Per-sample decisions implied by the clicks so far (fill forward). */
export declare function previewDecisions(samples: ReviewSample[], clicks: Click[]): (Decision | undefined)[];
export declare function recordClick(screen: ScreenModel, sampleId: string, decision: Decision): ScreenModel;
/** Submit is allowed once the first and last cards carry a click. */
export declare function canSubmit(screen: ScreenModel): boolean;
export declare function submit(screen: ScreenModel, baseUrl: string): Promise<DecisionSummary>;
