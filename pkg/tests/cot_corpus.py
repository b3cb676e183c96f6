"""Synthetic reasoning traces with planted strategy phrases."""

import random

PHRASES = {
    "PiDigits": ["Maybe I could take some decimal places of pi.", "What about the digits of π after 3.14?"],
    "DateTime": ["I could use the current time and take the minutes.", "If today is the 4th, maybe add the day and month."],
    "CentralValue": ["Something in the middle feels safe.", "The midpoint of the range is an option."],
    "WordMapping": ["Pick a random word and count the number of letters.", "Map each letter to a number, A=1, B=2, C=3."],
    "CodeRandFunction": ["In Python I would call random.randint(1, 100).", "A random number generator would do this instantly."],
    "RealWorldSimulation": ["Imagine rolling a die twice.", "I could flip a coin a few times."],
    "PersonalInfo": ["Maybe use my birthday for this.", "The last digits of a phone number could work."],
    "Instinct": ["I'll just go with the first number that comes to mind.", "Let me trust my gut here."],
}
FILLER = [
    "Okay, so I need to give the user one number.",
    "Hmm, that might not be truly random.",
    "But that seems too complicated for this.",
    "Wait, the user asked for only the number and nothing else.",
    "Let me think about this again.",
    "Alternatively, there could be another approach.",
]
PLANT = {"PiDigits": 0.10, "DateTime": 0.30, "CentralValue": 0.10, "WordMapping": 0.50,
         "CodeRandFunction": 0.60, "RealWorldSimulation": 0.60, "PersonalInfo": 0.30, "Instinct": 0.60}


def generate(n=1000, seed=0, plant=PLANT):
    """Return ``[(trace, planted_labels)]``."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        labels = {lab for lab, p in plant.items() if rng.random() < p}
        sentences = [rng.choice(FILLER) for _ in range(rng.randint(1, 4))]
        sentences += [rng.choice(PHRASES[lab]) for lab in sorted(labels)]
        rng.shuffle(sentences)
        out.append((" ".join(sentences) + f" I'll settle on {rng.randint(1, 100)}.", labels))
    return out
