/** Wire types mirroring the documented HTTP API. */

export type Mode = "mixed" | "with_sections" | "without_sections";

export interface ClassifyItem {
  section_title: string | null;
  context: string;
}

export interface ExpertScore {
  class_name: string;
  variant: string;
  positive_probability: number;
}

export interface ItemResult {
  section_title: string | null;
  context: string;
  setting: string;
  experts: ExpertScore[];
  meta_probabilities: Record<string, number>;
  predicted_class: string;
  reliable: boolean;
  cito_iri: string;
}

export interface ClassifyResponse {
  mode: Mode;
  threshold: number;
  results: ItemResult[];
}

export interface AttributionMass {
  positive: number;
  negative: number;
  signed: number;
}

export interface ExpertExplanation {
  class_name: string;
  variant: string;
  positive_probability: number;
  attribution_mass: AttributionMass;
  token_attributions: [string, number][];
}

export interface ExplainReport {
  instance_id: string;
  section_title: string | null;
  context: string;
  setting: string;
  ws_fallback: boolean;
  experts: ExpertExplanation[];
  meta_probabilities: Record<string, number>;
  predicted_class: string;
  cito_iri: string;
  threshold?: number;
  reliable?: boolean;
  effective_cito_iri?: string;
}

export interface ExplainResponse {
  mode: Mode;
  threshold: number;
  results: ExplainReport[];
}

export interface SchemaResponse {
  dataset_name: string;
  classes: string[];
  cito_iris: Record<string, string>;
  fallback_iri: string;
}
