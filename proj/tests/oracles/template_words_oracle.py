"""Checks each template asset against its counterpart in the reference markdown by
comparing word sequences (letters, digits and {placeholders}); layout and
quote glyphs are ignored. Prints the pinned SHA-256 of each asset."""
import hashlib
import pathlib
import re
import sys

root = pathlib.Path(__file__).resolve().parents[2]
src = (root / "paper.md").read_text()
assets = root / "assets" / "templates"

LABELS = {
    "VanillaJudge": "appendix:vanilla_prompt",
    "CoTJudge": "appendix:cot_prompt",
    "InitialMetaPrompt": "appendix:initial_meta_prompt",
    "FeedbackRequest": "feedback_generation",
    "RefineRequest": "appendix:refinemetaprompt",
    "ExamplePlaceholder": "appendix:example_placeholder",
    "SummarizeRequest": "fig:summarization_prompt",
}


def figure_body(label):
    end = src.index("\\label{" + label + "}")
    box_end = src.rindex("\\end{tcolorbox}", 0, end)
    start = src.rindex("\\ttfamily\\small", 0, box_end) + len("\\ttfamily\\small")
    return src[start:box_end]


def words(text, latex):
    if latex:
        text = re.sub(r"\\texttt\{(.*?)\}", r"\1", text)
        text = text.replace("\\{", "{").replace("\\}", "}").replace("\\_", "_").replace("\\&", "&")
        text = text.replace("{{", "{").replace("}}", "}")
    else:
        text = text.replace("{{", "{").replace("}}", "}")
    return re.findall(r"\{[a-z_]+\}|[A-Za-z0-9]+", text)


ok = True
for name, label in LABELS.items():
    asset = (assets / f"{name}.txt").read_bytes()
    same = words(figure_body(label), True) == words(asset.decode(), False)
    ok &= same
    print(f"{name:20s} words_match={same} sha256={hashlib.sha256(asset).hexdigest()}")
sys.exit(0 if ok else 1)
