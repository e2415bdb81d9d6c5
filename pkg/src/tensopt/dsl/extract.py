"""Pull kernel source out of free-form model output.

Model responses mix prose with code.  The extractor prefers the last fenced
code block that contains a kernel definition; failing that, it brace-matches
the last bare ``void test(`` it can find.  Returns ``None`` when no candidate
exists — the caller treats that sample as failed, never as empty code.
"""

from __future__ import annotations

import re

_FENCE_RE = re.compile(r"^[ \t]*```[^\n]*$", re.MULTILINE)
_ENTRY = "void test"


def _fenced_blocks(text: str) -> list[str]:
    marks = list(_FENCE_RE.finditer(text))
    blocks = []
    for i in range(0, len(marks) - 1, 2):
        inner = text[marks[i].end(): marks[i + 1].start()]
        blocks.append(inner.strip("\n"))
    return blocks


def _strip_comments(text: str) -> str:
    """Blank out comments (preserving length) so brace matching can't be
    fooled by braces inside them."""
    out = list(text)
    i, n = 0, len(text)
    while i < n:
        if text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            for k in range(i, j):
                out[k] = " "
            i = j
        elif text.startswith("/*", i):
            j = text.find("*/", i + 2)
            j = n - 2 if j < 0 else j
            for k in range(i, j + 2):
                if out[k] != "\n":
                    out[k] = " "
            i = j + 2
        else:
            i += 1
    return "".join(out)


def _brace_match(text: str) -> str | None:
    scrubbed = _strip_comments(text)
    start = scrubbed.rfind(_ENTRY)
    if start < 0:
        return None
    open_brace = scrubbed.find("{", start)
    if open_brace < 0:
        return None
    depth = 0
    for i in range(open_brace, len(scrubbed)):
        c = scrubbed[i]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return text[start: i + 1]
    return None


def extract_code_block(text: str) -> str | None:
    """Extract kernel source from a model response, or None if absent."""
    if not text:
        return None
    blocks = _fenced_blocks(text)
    for block in reversed(blocks):
        if _ENTRY in block:
            return block
    # Fenced block without the entry point is not a kernel; fall back to
    # scanning the full text (prose plus code) for a bare definition.
    return _brace_match(text)
