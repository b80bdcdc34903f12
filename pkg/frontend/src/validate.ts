// Client-side directive validation mirroring the server's wire schema.
// Invalid forms never leave the browser.

const VERBS = new Set([
  "block_web_traffic",
  "server_monitor",
  "build_isolate_mod",
  "isolate",
  "deploy_module",
]);

const TARGET_PATTERN = /^(all_hosts|all_servers|subnet:[a-z0-9_-]+|host:[0-9]+)$/;

export interface DirectiveDraft {
  cpcon_level: unknown;
  threat: unknown;
  actions: unknown;
}

/** Returns null when the draft is submittable, else a human-readable error. */
export function validateDirective(draft: DirectiveDraft): string | null {
  const level = draft.cpcon_level;
  if (typeof level !== "number" || !Number.isInteger(level) || level < 1 || level > 5) {
    return "cpcon_level must be an integer between 1 and 5";
  }
  if (typeof draft.threat !== "string" || draft.threat.trim() === "") {
    return "threat must be a non-empty string";
  }
  if (!Array.isArray(draft.actions) || draft.actions.length === 0) {
    return "actions must be a non-empty array";
  }
  const seen = new Set<string>();
  for (const action of draft.actions) {
    if (typeof action !== "object" || action === null) {
      return "each action must be an object";
    }
    const verb = (action as Record<string, unknown>).verb;
    if (typeof verb !== "string" || !VERBS.has(verb.toLowerCase())) {
      return `unknown verb: ${String(verb)}`;
    }
    const targets = (action as Record<string, unknown>).targets;
    if (!Array.isArray(targets) || targets.length === 0) {
      return `action "${verb}" needs at least one target`;
    }
    for (const target of targets) {
      if (typeof target !== "string" || !TARGET_PATTERN.test(target)) {
        return `bad target selector: ${String(target)}`;
      }
      const pair = `${verb.toLowerCase()}|${target}`;
      if (seen.has(pair)) {
        return `duplicate action pair: ${verb} -> ${target}`;
      }
      seen.add(pair);
    }
  }
  return null;
}
