"""Validation tests for documentation content."""

import re
from pathlib import Path

import pytest

from xormmap.cli import Method
from xormmap.output import BENCH_COLUMNS

ROOT = Path(__file__).parent.parent
DOCS = ROOT / "docs"

# Maximum line length for code blocks and examples
MAX_LINE_LENGTH = 80


def get_markdown_files():
    return sorted(DOCS.rglob("*.md"))


def extract_code_blocks(content: str):
    """(line_number, line, block_type) for every line inside a fenced block."""
    code_lines = []
    block_type = None
    for i, line in enumerate(content.split("\n"), 1):
        if line.strip().startswith("```"):
            if block_type is None:
                match = re.match(r"```(\w+)?", line.strip())
                block_type = match.group(1) if match and match.group(1) else "unknown"
            else:
                block_type = None
        elif block_type is not None:
            code_lines.append((i, line, block_type))
    return code_lines


@pytest.mark.parametrize("md_file", get_markdown_files(), ids=lambda p: str(p.relative_to(DOCS)))
def test_code_block_line_length(md_file):
    """Code block lines fit in a narrow terminal."""
    long_lines = [
        (line_num, len(line), block_type)
        for line_num, line, block_type in extract_code_blocks(md_file.read_text())
        if len(line) > MAX_LINE_LENGTH
    ]
    if long_lines:
        message = f"\n\n{md_file} has code block lines exceeding {MAX_LINE_LENGTH} characters:\n"
        for line_num, length, block_type in long_lines:
            message += f"  Line {line_num} ({block_type}): {length} chars\n"
        pytest.fail(message)


def test_nav_pages_exist():
    """Every page listed in mkdocs.yml exists."""
    nav = re.findall(r":\s+(\S+\.md)\s*$", (ROOT / "mkdocs.yml").read_text(), re.MULTILINE)
    assert nav
    missing = [page for page in nav if not (DOCS / page).exists()]
    assert missing == []


def test_cli_reference_lists_every_method():
    text = (DOCS / "reference" / "cli.md").read_text()
    for method in Method:
        assert f"`{method.value}`" in text


def test_cli_reference_lists_bench_columns():
    text = " ".join((DOCS / "reference" / "cli.md").read_text().split())
    assert ", ".join(BENCH_COLUMNS) in text
