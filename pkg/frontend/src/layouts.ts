/** Per-experiment selection screen layouts.
 *
 * The server's choice_set is authoritative for the wire labels; this module
 * validates its shape against the known experiments and decorates each entry
 * for display. Experiment 1 offers the four surfaces, experiment 2 the four
 * letters plus "none", experiment 3 only P and B; every experiment appends
 * the explicit give-up option.
 */

export type OptionKind = "surface" | "letter" | "none" | "undefinable";

export interface ChoiceOption {
  label: string;
  display: string;
  kind: OptionKind;
}

export const UNDEFINABLE = "UNDEFINABLE";

const EXPECTED_OPTION_COUNT: Record<number, number> = { 1: 5, 2: 6, 3: 3 };

function displayName(label: string): string {
  if (label === UNDEFINABLE) {
    return "undefinable";
  }
  if (label === "NONE") {
    return "no letter";
  }
  return label.replace(/_/g, " ");
}

function kindOf(experimentId: number, label: string): OptionKind {
  if (label === UNDEFINABLE) {
    return "undefinable";
  }
  if (label === "NONE") {
    return "none";
  }
  return experimentId === 1 ? "surface" : "letter";
}

export function selectionLayout(
  experimentId: number,
  choiceSet: readonly string[],
): ChoiceOption[] {
  const expected = EXPECTED_OPTION_COUNT[experimentId];
  if (expected === undefined) {
    throw new Error(`unknown experiment id ${experimentId}`);
  }
  if (choiceSet.length !== expected) {
    throw new Error(
      `experiment ${experimentId} expects ${expected} choices, got ${choiceSet.length}`,
    );
  }
  if (choiceSet[choiceSet.length - 1] !== UNDEFINABLE) {
    throw new Error("the last choice must be the undefinable option");
  }
  return choiceSet.map((label) => ({
    label,
    display: displayName(label),
    kind: kindOf(experimentId, label),
  }));
}
