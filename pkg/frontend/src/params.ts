/**
 * Retrieval parameter panel model.
 *
 * Bounds mirror the server-side config validation exactly, so anything
 * the panel accepts the service accepts too; out-of-range input is
 * rejected client-side with the same limits.
 */

export interface ParamValues {
  "mmr.k": number;
  "mmr.lambda": number;
  "pr.alpha": number;
  "pr.min_sim": number;
  "pr.top_k": number;
  "pr.token_budget": number;
  mode: "direct" | "hyde";
}

export const DEFAULT_PARAMS: ParamValues = {
  "mmr.k": 3,
  "mmr.lambda": 0.5,
  "pr.alpha": 0.85,
  "pr.min_sim": 0.01,
  "pr.top_k": 3,
  "pr.token_budget": 1800,
  mode: "direct",
};

export interface ParamSpec {
  key: keyof ParamValues;
  label: string;
  min?: number;
  max?: number;
  maxExclusive?: boolean;
  integer?: boolean;
  choices?: string[];
  step?: number;
}

export const PARAM_SPECS: ParamSpec[] = [
  { key: "mmr.k", label: "MMR candidates (k)", min: 1, integer: true, step: 1 },
  { key: "mmr.lambda", label: "MMR lambda", min: 0, max: 1, step: 0.05 },
  { key: "pr.alpha", label: "PageRank damping", min: 0, max: 1, maxExclusive: true, step: 0.05 },
  { key: "pr.min_sim", label: "Edge threshold", min: 0, step: 0.01 },
  { key: "pr.top_k", label: "Context chunks (top k)", min: 1, integer: true, step: 1 },
  { key: "pr.token_budget", label: "Token budget", min: 1, integer: true, step: 50 },
  { key: "mode", label: "Query embedding", choices: ["direct", "hyde"] },
];

/** Returns an error message, or null when the value is in range. */
export function validateParam(key: keyof ParamValues, value: number | string): string | null {
  const spec = PARAM_SPECS.find((s) => s.key === key);
  if (!spec) return `unknown parameter ${key}`;
  if (spec.choices) {
    return spec.choices.includes(String(value))
      ? null
      : `${spec.label} must be one of ${spec.choices.join(", ")}`;
  }
  const num = Number(value);
  if (!Number.isFinite(num)) return `${spec.label} must be a number`;
  if (spec.integer && !Number.isInteger(num)) return `${spec.label} must be an integer`;
  if (spec.min !== undefined && num < spec.min) return `${spec.label} must be >= ${spec.min}`;
  if (spec.max !== undefined) {
    if (spec.maxExclusive ? num >= spec.max : num > spec.max) {
      return `${spec.label} must be ${spec.maxExclusive ? "<" : "<="} ${spec.max}`;
    }
  }
  return null;
}

/**
 * Config overrides for the query body: the live panel values keyed by
 * their dotted config names. The embedding mode travels separately (a
 * query field, not an override).
 */
export function toOverrides(params: ParamValues): Record<string, number> {
  const overrides: Record<string, number> = {};
  for (const spec of PARAM_SPECS) {
    if (spec.key === "mode") continue;
    overrides[spec.key] = params[spec.key] as number;
  }
  return overrides;
}
