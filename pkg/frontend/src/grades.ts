/** The three grade options. This list is the only source of grade values
 * anywhere in the UI: buttons are generated from it and the submit path
 * re-validates against it, so no other value can ever reach the service. */
export const GRADE_OPTIONS = [
  { value: 1, label: "reasonable", key: "1" },
  { value: 0.5, label: "partially reasonable", key: "2" },
  { value: 0, label: "unreasonable", key: "3" },
] as const;

export type Grade = (typeof GRADE_OPTIONS)[number]["value"];

const GRADE_VALUES: readonly number[] = GRADE_OPTIONS.map((o) => o.value);

export function isGrade(value: unknown): value is Grade {
  return typeof value === "number" && GRADE_VALUES.includes(value);
}

export function gradeForKey(key: string): Grade | null {
  for (const option of GRADE_OPTIONS) {
    if (option.key === key) {
      return option.value;
    }
  }
  return null;
}
