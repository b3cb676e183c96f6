"""How raw completions become histogram entries.

Models do not always answer with a bare number. The parser strips any
<think> block, finds the integer, and records why an answer was or was
not usable. Only `ok`, `extra_text` and `decoherent` values reach the
histogram; `out_of_range` is counted but excluded from the statistics.
"""

from rngaudit.parsing import parse_output

# (completion, upper bound of the requested range)
samples = [
    ("4", 5),
    (" 3\n", 5),
    ("7. I picked seven because it feels random.", 10),
    ("<think>Okay, the user wants a number between 1 and 100. Let me go with 74.</think>\n74", 100),
    ("9", 5),
    ("Sure! Here's a random number: 42", 100),
    ("I cannot generate truly random numbers.", 5),
    ("２", 5),
    ("-3", 5),
    ("4.5", 5),
    ("47 ꧁༺ nonsense ༻꧂ ⟆⟆⟆", 100),
    ("<think>still deciding", 5),
    ("", 5),
]

print(f"{'input':<48} {'range':<6} {'status':<13} value")
for text, upper in samples:
    r = parse_output(text, upper)
    shown = text.replace("\n", "\\n")
    shown = shown if len(shown) <= 45 else shown[:42] + "..."
    print(f"{shown!r:<48} 1..{upper:<3} {str(r.status):<13} {r.value}")
    if r.think_text:
        print(f"{'':<55} think: {r.think_text[:40]!r}")
