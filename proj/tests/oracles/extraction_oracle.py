"""Expected verdicts from the reference extraction function, run verbatim."""
import json


def extract_judgment(judgment):
    if "[[A]]" in judgment and "[[B]]" in judgment:
        return "Not judged in the proper format.  [[A,B]]"
    if "[[A]]" in judgment:
        return "A"
    elif "[[B]]" in judgment:
        return "B"
    elif "[A]" in judgment:
        return "A"
    elif "[B]" in judgment:
        return "B"
    else:
        return "Not judged in the proper format."


INPUTS = [
    "After careful comparison, my final verdict: [[A]]",
    "[[A]] looked good at first, but also [[B]]",
    "I choose [B]",
    "",
    "[[B]] is better; note [A] was weaker",
    "Final: [[B]]",
    "[A]",
    "[[a]]",
    "[[ A ]]",
    "[A] and [B] both",
    "[[A]][[B]]",
    "verdict [[[A]]]",
    "[[A]",
    "A]] [[B",
    "[B] first, then [[A]]",
    "no marker at all",
    "éè [[B]] à",
    "[[A]]\n\n[[A]]",
]

if __name__ == "__main__":
    for s in INPUTS:
        print(json.dumps([s, extract_judgment(s)], ensure_ascii=False))
