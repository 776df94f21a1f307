#!/usr/bin/env python3
"""Regenerates the bundled corpus, mock fixture bank and test fixtures.

Deterministic: the same seed always writes the same bytes. The expected
values written next to each fixture (golden parse, genre histogram, export
files) come from the generator's own model of what it emitted, not from the
C++ code under test.

    python3 tools/make_fixtures.py
"""

import collections
import json
import os
import random
import textwrap

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")
TDATA = os.path.join(ROOT, "tests", "data")

GENRES = ["Drama", "Comedy", "Romance", "Action", "Thriller", "Crime", "Adventure", "Sci-Fi", "Horror",
          "Fantasy", "Mystery", "Family", "Biography", "Musical", "War", "History", "Sport", "Western"]

NOUNS = """house river letter window train garden doctor brother sister mother father village storm road
bridge market school office night morning winter summer camera secret promise ticket money truth island
harbor forest kitchen station hospital farm engine radio ring phone mirror painting music dream memory
crowd soldier teacher stranger neighbor captain detective singer lawyer child wedding funeral border city
desert mountain ocean boat factory church prison castle library newspaper song dance horse dog fire rain
""".split()
VERBS = """finds loses carries opens closes watches follows leaves remembers hides breaks builds sells buys
answers calls meets warns saves forgets reads writes paints steals returns chases crosses enters signs
""".split()
ADJS = """old quiet broken bright small distant cold warm empty crowded secret lonely angry gentle strange
familiar golden narrow heavy hidden careful young tired proud nervous
""".split()
NAMES = ["Margaret", "Thomas", "Elena", "Victor", "Priya", "Samuel", "Hana", "Oscar", "Lucia", "Arjun",
         "Nadia", "Felix", "Rosa", "Daniel", "Ingrid", "Marco"]
CUE_NAMES = ["MARGARET", "THOMAS", "ELENA", "VICTOR", "PRIYA", "SAMUEL", "JOSÉ", "ZOË", "DETECTIVE HALE",
             "OLD MAN", "NURSE", "CAPTAIN ROSS"]
PLACES = ["KITCHEN", "HARBOR", "TRAIN STATION", "HOSPITAL CORRIDOR", "FARMHOUSE", "POLICE STATION",
          "ROOFTOP", "MARKET SQUARE", "LIBRARY", "CAR", "BEACH", "CHURCH", "HOTEL LOBBY", "FOREST ROAD"]
TIMES = ["DAY", "NIGHT", "MORNING", "EVENING", "DUSK", "LATER", "CONTINUOUS"]
PARENS = ["(quietly)", "(beat)", "(smiling)", "(into phone)", "(turning away)", "(a long pause)"]


def sentence(rng, min_words=6, max_words=14):
    words = []
    n = rng.randint(min_words, max_words)
    while len(words) < n:
        pick = rng.random()
        if pick < 0.45:
            words += ["the", rng.choice(ADJS), rng.choice(NOUNS)]
        elif pick < 0.7:
            words += [rng.choice(NAMES), rng.choice(VERBS)]
        elif pick < 0.85:
            words += [rng.choice(["near", "after", "before", "beside", "under"]), "the", rng.choice(NOUNS)]
        else:
            words += [rng.choice(["and", "but", "while", "because"]), rng.choice(NOUNS)]
    words = words[:n]
    text = " ".join(words)
    return text[0].upper() + text[1:] + rng.choice([".", ".", ".", "!", "?"])


def paragraph(rng, sentences):
    return " ".join(sentence(rng) for _ in range(sentences))


def words_text(rng, count):
    """Prose with exactly `count` whitespace tokens, each holding letters."""
    out = []
    while len(out) < count:
        out += sentence(rng).split()
    out = out[:count]
    if not out[-1][-1] in ".!?":
        out[-1] += "."
    return " ".join(out)


def wc(text):
    """Word count as the tokenizer sees it: tokens holding a letter or digit."""
    return sum(1 for t in text.split() if any(ch.isalnum() for ch in t))


def write(path, content, newline="\n"):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(content.replace("\n", newline))


# ---------------------------------------------------------------------------
# Screenplay corpus


class Page:
    """Accumulates source lines and the elements they are expected to parse into."""

    def __init__(self, tabs=False):
        self.lines = []
        self.scenes = []
        self.warnings = []
        self.tabs = tabs

    def indent(self, cols):
        if self.tabs:
            return "\t" * (cols // 8) + " " * (cols % 8)
        return " " * cols

    def blank(self):
        self.lines.append("")

    def noise(self, text):
        self.lines.append(text)

    def element(self, kind, rows):
        """rows: list of (indent, text, counts) where counts=False marks noise."""
        start = len(self.lines)
        kept = []
        last = start
        for ind, text, counts in rows:
            self.lines.append(self.indent(ind) + text if counts else text)
            if counts:
                kept.append(text.strip())
                last = len(self.lines)
        if kind == "Slugline":
            self.scenes.append([])
        elif not self.scenes:
            self.scenes.append([{"kind": "Slugline", "text": "INT. UNKNOWN - DAY", "line_span": [0, 0]}])
            self.warnings.append("HeaderlessScene")
        self.scenes[-1].append({"kind": kind, "text": "\n".join(kept), "line_span": [start, last]})

    def transition(self, text):
        self.lines.append(" " * (60 - len(text)) + text)


def slug(rng):
    prefix = rng.choice(["INT.", "INT.", "EXT.", "EXT.", "INT./EXT."])
    return f"{prefix} {rng.choice(PLACES)} - {rng.choice(TIMES)}"


def action_rows(rng, width=58):
    return [(0, line, True) for line in textwrap.wrap(paragraph(rng, rng.randint(1, 3)), width)]


def dialogue_rows(rng, page_break=False):
    rows = []
    if rng.random() < 0.3:
        rows.append((15, rng.choice(PARENS), True))
    lines = textwrap.wrap(paragraph(rng, rng.randint(1, 3)), 34)
    for i, line in enumerate(lines):
        rows.append((10, line, True))
        if page_break and i == 0 and len(lines) > 1:
            rows.append((0, " " * 44 + "(CONTINUED)", False))
            rows.append((0, " " * 54 + f"{rng.randint(2, 120)}.", False))
            rows.append((0, "CONTINUED:", False))
        if i == 0 and len(lines) > 2 and rng.random() < 0.3:
            rows.append((15, rng.choice(PARENS), True))
    return rows


def cue_text(rng):
    name = rng.choice(CUE_NAMES)
    r = rng.random()
    if r < 0.12:
        return name + " (V.O.)"
    if r < 0.2:
        return name + " (O.S.)"
    if r < 0.28:
        return name + " (CONT'D)"
    return name


def scene(rng, page, dates=False):
    page.element("Slugline", [(0, slug(rng), True)])
    page.blank()
    if dates and rng.random() < 0.4:
        page.noise(rng.choice(["March 3, 1998", "12/03/1998", "Tuesday, June 14, 2005", "3-12-98"]))
        page.blank()
    for _ in range(rng.randint(2, 6)):
        if rng.random() < 0.4:
            page.element("Action", action_rows(rng))
        else:
            page.element("CharacterCue", [(22, cue_text(rng), True)])
            page.element("Dialogue", dialogue_rows(rng, page_break=rng.random() < 0.15))
        page.blank()
        if rng.random() < 0.05:
            page.noise(" " * 54 + f"{rng.randint(2, 120)}.")
            page.blank()
    if rng.random() < 0.35:
        page.transition(rng.choice(["CUT TO:", "DISSOLVE TO:", "SMASH CUT TO:", "MATCH CUT TO:"]))
        page.blank()


def make_corpus():
    specs = [
        ("the_harbor_letters.txt", 101, dict(scenes=22, headerless=False, tabs=False, crlf=False, dates=True)),
        ("night_train.txt", 102, dict(scenes=21, headerless=True, tabs=False, crlf=False, dates=False)),
        ("winter_garden.txt", 103, dict(scenes=20, headerless=False, tabs=True, crlf=False, dates=True)),
        ("the_quiet_border.txt", 104, dict(scenes=22, headerless=False, tabs=False, crlf=True, dates=False)),
        ("golden_island.txt", 105, dict(scenes=21, headerless=True, tabs=False, crlf=False, dates=True)),
    ]
    golden = []
    for fname, seed, opt in specs:
        rng = random.Random(seed)
        page = Page(tabs=opt["tabs"])
        page.transition("FADE IN:")
        page.blank()
        if opt["headerless"]:
            page.element("Action", action_rows(rng))
            page.blank()
        for _ in range(opt["scenes"]):
            scene(rng, page, dates=opt["dates"])
        page.transition("FADE OUT.")
        text = "\n".join(page.lines) + "\n"
        write(os.path.join(DATA, "corpus", fname), text, "\r\n" if opt["crlf"] else "\n")
        golden.append({"file": fname, "scenes": [{"elements": s} for s in page.scenes], "warnings": page.warnings})
    write(os.path.join(TDATA, "corpus_golden.json"), json.dumps(golden, indent=1, ensure_ascii=False) + "\n")
    return golden


# ---------------------------------------------------------------------------
# Plots, scenes and storylines


def plot_acts(rng, total=None, shares=(0.25, 0.25, 0.25, 0.25)):
    total = total or rng.randint(640, 760)
    counts = [max(1, round(total * s)) for s in shares]
    counts[-1] = total - sum(counts[:-1])
    return [words_text(rng, c) for c in counts]


def annotate(acts):
    tags = ["<one>", "<two-a>", "<two-b>", "<three>"]
    return " ".join(f"{a} {t}" for a, t in zip(acts, tags))


def storyline(rng, lo=18, hi=34):
    return words_text(rng, rng.randint(lo, hi))


def tagged_scene(rng, target_words):
    """Tagged scene text with exactly target_words tokens outside the tags."""
    parts = [("<bsl>", "<esl>", f"INT. {rng.choice(PLACES)} - {rng.choice(TIMES)}")]
    used = wc(parts[0][2])
    while used < target_words:
        left = target_words - used
        if rng.random() < 0.4 or left < 4:
            n = min(left, rng.randint(15, 40))
            parts.append(("<bal>", "<eal>", words_text(rng, n)))
            used += n
        else:
            cue = rng.choice(["MARGARET", "THOMAS", "ELENA", "VICTOR", "NURSE"])
            parts.append(("<bcn>", "<ecn>", cue))
            used += 1
            n = min(target_words - used, rng.randint(10, 30))
            if n <= 0:
                parts.pop()
                used -= 1
                n = target_words - used
                parts.append(("<bal>", "<eal>", words_text(rng, n)))
                used += n
                continue
            parts.append(("<bd>", "<ed>", words_text(rng, n)))
            used += n
    return "\n".join(f"{b} {t} {e}" for b, e, t in parts)


def make_mock_bank():
    rng = random.Random(7)
    bank = os.path.join(DATA, "mock_bank")
    rows = [("name", "kind", "profile", "expect", "file")]

    def add(name, kind, profile, expect, text):
        fname = f"{name}.txt"
        write(os.path.join(bank, fname), text)
        rows.append((name, kind, profile, ",".join(expect) if expect else "-", fname))

    add("plot_rescue", "plot", "ASG", [], " " + annotate(plot_acts(rng)) + "\n<|end|>")
    add("plot_inheritance", "plot", "AS", [], " " + annotate(plot_acts(rng)) + "\n<|end|>\n\nThe next plot begins here and must be dropped.")
    add("plot_long_voyage", "plot", "ALG", [], " " + annotate(plot_acts(rng)))
    add("plot_reunion", "plot", "AL", [], " " + annotate(plot_acts(rng)) + "\n<|end|>")
    add("plot_too_short", "plot", "AS", ["LengthOutOfRange"], " " + annotate(plot_acts(rng, total=320)))
    acts = plot_acts(rng)
    add("plot_missing_three", "plot", "ASG", ["MissingTag"],
        " " + " ".join([acts[0], "<one>", acts[1], "<two-a>", acts[2], "<two-b>", acts[3]]))
    acts = plot_acts(rng)
    add("plot_duplicate_tag", "plot", "AS", ["DuplicateTag"],
        " " + " ".join([acts[0], "<one>", acts[1], "<two-a>", acts[2], "<two-a>", acts[3], "<three>"]))
    acts = plot_acts(rng)
    add("plot_out_of_order", "plot", "AS", ["OutOfOrderTags"],
        " " + " ".join([acts[0], "<one>", acts[1], "<two-b>", acts[2], "<two-a>", acts[3], "<three>"]))
    acts = plot_acts(rng)
    add("plot_empty_act", "plot", "ASG", ["EmptyAct"],
        " " + " ".join([acts[0] + " " + acts[1], "<one>", "<two-a>", acts[2], "<two-b>", acts[3], "<three>"]))
    add("plot_short_act", "plot", "AS", ["ShortAct"],
        " " + annotate(plot_acts(rng, total=700, shares=(0.35, 0.3, 0.31, 0.04))))
    add("plot_unannotated", "plot", "O", [], " " + " ".join(plot_acts(rng)) + "\n<|end|>")

    add("scene_kitchen", "scene", "-", [], " " + tagged_scene(rng, 320) + "\n<|end|>")
    add("scene_harbor", "scene", "-", [], " " + tagged_scene(rng, 260) + "\n<|end|>\nTrailing model chatter after the stop sequence.")
    add("scene_station", "scene", "-", [], " " + tagged_scene(rng, 450))
    body = tagged_scene(rng, 300).split("\n")
    body.insert(2, "and then some text the model wrote outside any tag")
    add("scene_stray_text", "scene", "-", ["StrayText"], " " + "\n".join(body))
    body = tagged_scene(rng, 300).split("\n")
    body[1] = body[1].replace("<eal>", "<ed>") if body[1].startswith("<bal>") else body[1].replace("<ecn>", "<eal>")
    add("scene_unbalanced", "scene", "-", ["UnbalancedTags"], " " + "\n".join(body))
    add("scene_empty", "scene", "-", ["EmptyScene", "LengthOutOfRange"], " \n<|end|>")
    body = tagged_scene(rng, 300).split("\n")
    body.insert(1, "<bd> " + words_text(rng, 12) + " <ed>")
    add("scene_orphan_dialogue", "scene", "-", ["DialogueWithoutCue"], " " + "\n".join(body))
    body = tagged_scene(rng, 300).split("\n")
    body.insert(2, "<bal>   <eal>")
    add("scene_empty_element", "scene", "-", ["EmptyElement"], " " + "\n".join(body))

    write(os.path.join(bank, "index.tsv"), "\n".join("\t".join(r) for r in rows) + "\n")

    # Requests that go with each fixture in end-to-end runs.
    requests = {}
    for name, kind, profile, expect, _ in rows[1:]:
        if kind == "plot":
            req = {"storyline": storyline(rng), "profile": profile}
            if profile in ("AL", "ALG"):
                req["long_storyline"] = words_text(rng, rng.randint(60, 120))
            req["genres"] = rng.sample(GENRES, rng.randint(1, 3)) if profile.endswith("G") else []
        else:
            req = {"description": storyline(rng)}
        requests[name] = req
    write(os.path.join(TDATA, "mock_requests.json"), json.dumps(requests, indent=1) + "\n")


def plot_record(rng, rid, with_long=True):
    rec = {"id": rid, "kind": "plot", "storyline": storyline(rng), "genres": rng.sample(GENRES, rng.randint(1, 3)),
           "target_text": annotate(plot_acts(rng))}
    if with_long:
        rec["long_storyline"] = words_text(rng, rng.randint(50, 150))
    return rec


def export_golden(records, profile):
    sep, stop = "\n\n###\n\n", "\n<|end|>"
    header = {"format": "prompt-completion", "profile": profile, "prompt_separator": sep, "stop_sequence": stop}
    out = ["# " + json.dumps(header, separators=(",", ":"), ensure_ascii=False, sort_keys=True)]
    for r in records:
        story = r["long_storyline"] if profile in ("AL", "ALG") else r["storyline"]
        prompt = (", ".join(r["genres"]) + ". " if profile.endswith("G") else "") + story + sep
        target = r["target_text"]
        if profile == "O":
            for t in ["<one>", "<two-a>", "<two-b>", "<three>"]:
                target = target.replace(" " + t, "")
            target = target.strip()
        out.append(json.dumps({"completion": " " + target + stop, "prompt": prompt},
                              separators=(",", ":"), ensure_ascii=False, sort_keys=True))
    return "\n".join(out) + "\n"


def make_datasets():
    rng = random.Random(11)
    plots = [plot_record(rng, f"plot-{i:03d}", with_long=i % 3 != 0) for i in range(1, 51)]
    write(os.path.join(TDATA, "plots50.jsonl"), "".join(json.dumps(r) + "\n" for r in plots))
    counts = collections.Counter(g for r in plots for g in r["genres"])
    hist = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    write(os.path.join(TDATA, "plots50_genres.json"),
          json.dumps([{"genre": g, "count": c} for g, c in hist], indent=1) + "\n")

    export = [plot_record(rng, f"exp-{i:02d}") for i in range(1, 21)]
    write(os.path.join(TDATA, "export20.jsonl"), "".join(json.dumps(r) + "\n" for r in export))
    for prof in ["O", "AS", "AL", "ASG", "ALG"]:
        write(os.path.join(TDATA, "export20", f"{prof}.jsonl"), export_golden(export, prof))

    # Manifest import: four good rows, one with a missing file, one with an unknown genre.
    base = os.path.join(TDATA, "manifest")
    rows = ["id\tstoryline_file\tlong_storyline_file\tgenres\ttarget_file\tkind"]
    for i in range(1, 5):
        r = plot_record(rng, f"m{i}")
        write(os.path.join(base, f"m{i}.story.txt"), r["storyline"] + "\n")
        write(os.path.join(base, f"m{i}.long.txt"), r["long_storyline"] + "\n")
        write(os.path.join(base, f"m{i}.plot.txt"), r["target_text"] + "\n")
        rows.append(f"m{i}\tm{i}.story.txt\tm{i}.long.txt\t{';'.join(r['genres'])}\tm{i}.plot.txt\tplot")
    rows.append("m5\tm5.story.txt\t\tDrama\tmissing.plot.txt\tplot")
    write(os.path.join(base, "m5.story.txt"), storyline(rng) + "\n")
    rows.append("m6\tm1.story.txt\t\tSpaghetti\tm1.plot.txt\tplot")
    scene_text = tagged_scene(rng, 280)
    write(os.path.join(base, "s1.scene.txt"), scene_text + "\n")
    write(os.path.join(base, "s1.desc.txt"), storyline(rng) + "\n")
    rows.append("s1\ts1.desc.txt\t\t\ts1.scene.txt\tscene")
    write(os.path.join(base, "manifest.tsv"), "\n".join(rows) + "\n")


def make_eval():
    rng = random.Random(23)
    base = os.path.join(TDATA, "eval")
    cands, refs, lps = [], [], []
    for _ in range(3):
        ref = paragraph(rng, 4)
        words = ref.split()
        cand = []
        for w in words:
            r = rng.random()
            if r < 0.2:
                cand.append(rng.choice(NOUNS))
            elif r < 0.25:
                continue
            else:
                cand.append(w)
        if len(cands) == 2:
            cand += cand[:6] + cand[2:5]
        cands.append(" ".join(cand))
        refs.append(ref)
        lps.append(" ".join(f"{-rng.uniform(0.05, 4.0):.6f}" for _ in cand))
    write(os.path.join(base, "candidates.txt"), "\n".join(cands) + "\n")
    write(os.path.join(base, "references.txt"), "\n".join(refs) + "\n")
    write(os.path.join(base, "logprobs.txt"), "\n".join(lps) + "\n")


if __name__ == "__main__":
    make_corpus()
    make_mock_bank()
    make_datasets()
    make_eval()
