"""Regenerates the bundled stand-in prompt corpora in data/corpora."""
import pathlib
import random

SUBJECTS = ["the river", "a small village", "the old bridge", "the committee", "our neighbor",
            "the railway", "a tired traveler", "the harbor", "the northern valley", "the library",
            "a young engineer", "the orchestra", "the garden", "the museum", "a local baker",
            "the mountain road", "the council", "the lighthouse", "a quiet student", "the market"]
VERBS = ["crossed", "described", "rebuilt", "ignored", "visited", "repaired", "remembered",
         "measured", "painted", "opened", "followed", "studied", "protected", "welcomed", "sold"]
OBJECTS = ["the northern field", "an unfinished letter", "the winter harvest", "a wooden boat",
           "the town records", "an old map", "the east wing", "a broken clock", "the spring festival",
           "the stone wall", "a faded photograph", "the copper mine", "the school roof",
           "a long journey", "the evening train", "the weather report", "a box of tools"]
TAILS = ["before the rain arrived", "during the long summer", "without telling anyone",
         "after many years", "at the edge of town", "for the first time", "in the early morning",
         "despite the cold", "with great care", "as the sun went down", "near the old mill",
         "while the children slept", "along the coast", "under a grey sky"]
TOPICS = ["cooking", "gardening", "travel", "history", "weather", "music", "cycling", "books",
          "photography", "local news", "hiking", "painting", "sailing", "chess", "birds"]
OPENERS = ["Honestly, I think", "Last week I read that", "Many people say", "In my experience",
           "A friend told me", "It turns out", "Nobody expected that", "I keep hearing that",
           "The funny thing is", "According to the forum,"]
CLAIMS = ["{t} is easier than it looks", "{t} takes more patience than money",
          "beginners in {t} should start slowly", "{t} changed a lot over the last decade",
          "the best part of {t} is the people", "{t} is more popular in small towns",
          "prices for {t} gear keep going up", "{t} clubs are looking for new members"]


def archive_line(rng):
    s = f"{rng.choice(SUBJECTS).capitalize()} {rng.choice(VERBS)} {rng.choice(OBJECTS)} {rng.choice(TAILS)}."
    if rng.random() < 0.5:
        s += f" Later, {rng.choice(SUBJECTS)} {rng.choice(VERBS)} {rng.choice(OBJECTS)}."
    return s


def web_line(rng):
    t = rng.choice(TOPICS)
    s = f"{rng.choice(OPENERS)} {rng.choice(CLAIMS).format(t=t)}."
    if rng.random() < 0.6:
        s += f" {rng.choice(SUBJECTS).capitalize()} {rng.choice(VERBS)} {rng.choice(OBJECTS)} {rng.choice(TAILS)}."
    return s


def write(path, fn, seed, n=1000):
    rng = random.Random(seed)
    seen, lines = set(), []
    while len(lines) < n:
        line = fn(rng)
        if line not in seen:
            seen.add(line)
            lines.append(line)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "corpora"
    out.mkdir(parents=True, exist_ok=True)
    write(out / "archive.txt", archive_line, 1)
    write(out / "webtext.txt", web_line, 2)
