"""Plain-text rendering of reports for terminals."""

import logging
from typing import Any, List, Sequence

from ciscurv.jetspace import CodimReport

logger = logging.getLogger(__name__)

CODIM_COLUMNS = ["locus", "d", "n", "l", "codim", "codim > d", "hypothesis", "holds"]


class ReportFormatter:
    """Formats report data into aligned text tables."""

    @staticmethod
    def format_codim_table(reports: Sequence[CodimReport]) -> str:
        """Format codimension reports as an aligned table.

        Args:
            reports: CodimReport records, typically from threshold_table.

        Returns:
            Table text with a header, one row per report and any notes below.
        """
        if not reports:
            return "No applicable loci."

        rows = [
            [
                report.locus.name,
                str(report.spec.d),
                str(report.spec.n),
                str(report.spec.l),
                str(report.codim_lower_bound),
                ReportFormatter._yes_no(report.threshold_holds),
                report.hypothesis_name,
                ReportFormatter._yes_no(report.hypothesis_holds),
            ]
            for report in reports
        ]
        lines: List[str] = ReportFormatter.format_table(CODIM_COLUMNS, rows)

        notes = []
        for report in reports:
            for note in report.notes:
                notes.append(f"  {report.locus.name}: {note}")
        if notes:
            lines.append("")
            lines.append("Notes:")
            lines.extend(notes)

        return "\n".join(lines)

    @staticmethod
    def format_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> List[str]:
        """Left-aligned columns separated by two spaces, with a dashed rule."""
        cells = [[str(c) for c in header]] + [[ReportFormatter._cell(c) for c in row] for row in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(header))]

        lines: List[str] = []
        for k, row in enumerate(cells):
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return lines

    @staticmethod
    def _cell(value: Any) -> str:
        if value is None:
            return "-"
        if isinstance(value, float):
            return f"{value:.6g}"
        return str(value)

    @staticmethod
    def _yes_no(flag: bool) -> str:
        return "yes" if flag else "no"
