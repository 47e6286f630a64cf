/** Mirrors of the service JSON payloads. The server owns all invariants;
 * these types only describe what arrives over the wire. */

export interface FractionJson {
  num: number;
  den: number;
}

export function fractionToNumber(f: FractionJson): number {
  return f.num / f.den;
}

export interface ElementRefJson {
  schema: string;
  kind: "node" | "edge" | "property";
  ref: string;
}

export function refKey(r: ElementRefJson): string {
  return `${r.schema}:${r.ref}`;
}

export type CorrStatus = "PROPOSED" | "ACCEPTED" | "REJECTED";

export interface CorrespondenceJson {
  id: string;
  source: ElementRefJson;
  target: ElementRefJson;
  confidence: FractionJson;
  evidence: { signal: string; score: FractionJson }[];
  status: CorrStatus;
  decidedBy: string | null;
}

export interface PropertyJson {
  name: string;
  type: unknown;
}

export interface SchemaNodeJson {
  id: string;
  label: string;
  properties: PropertyJson[];
}

export interface EndpointJson {
  node: string;
  role: string;
  min: number;
  max: number | "*";
}

export interface SchemaEdgeJson {
  id: string;
  label: string;
  kind: "association" | "aggregation" | "generalization" | "function";
  endpoints: EndpointJson[];
}

export interface SchemaJson {
  name: string;
  nodes: SchemaNodeJson[];
  edges: SchemaEdgeJson[];
  types: unknown[];
  constraints: unknown[];
}

export interface MappingRuleJson {
  id: string;
  sources: ElementRefJson[];
  target: ElementRefJson;
  transform: { kind: string } & Record<string, unknown>;
  [extra: string]: unknown;
}

export interface MappingJson {
  rules: MappingRuleJson[];
  keys: unknown[];
}

export interface ProjectDoc {
  format: string;
  name: string;
  revision: number;
  sources: SchemaJson[];
  target: SchemaJson | null;
  synonyms: unknown;
  correspondences: CorrespondenceJson[];
  mapping: MappingJson;
  config: Record<string, unknown>;
}

export interface PathScoreJson {
  from: ElementRefJson;
  to: ElementRefJson;
  rules: string[];
  score: number;
}

export type FindingStatus =
  | "EQUAL_SCORE_COMMUTATIVE"
  | "COMMUTATIVE"
  | "CONSISTENCY_ERROR"
  | "VACUOUS"
  | "UNCHECKED";

export interface CounterexampleJson {
  element?: string;
  input: unknown;
  via1: unknown;
  via2: unknown;
}

export interface FindingJson {
  from: ElementRefJson;
  to: ElementRefJson;
  path1: string[];
  path2: string[];
  score1: number;
  score2: number;
  status: FindingStatus;
  recommendation?: string | null;
  counterexamples?: CounterexampleJson[];
}

export interface QualityJson {
  perfect: boolean;
  maximumMatchingSize: number;
  overallScore: number;
  deficientSet: { sources: string[]; neighborhood: string[] } | null;
  unmatchedSources: string[];
  unmatchedTargets: string[];
  propertyCoverage: { sourceProperties: number; matchedSourceProperties: number };
  ruleScores: Record<string, number>;
  pathScores: PathScoreJson[];
  commutativityFindings: FindingJson[];
}

export interface DecisionResponse {
  correspondence: CorrespondenceJson;
  warnings: string[];
  revision: number;
}

export interface ErrorEnvelope {
  error: { code: string; message: string; details?: Record<string, unknown> };
}
