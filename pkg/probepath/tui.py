from textual.app import App, ComposeResult
from textual.containers import Container
from textual.widgets import DataTable, Footer, Header, Static

from probepath.pipeline import CSV_COLUMNS, PlanReport


def summary_text(report: PlanReport) -> str:
    lines = [
        f"solver {report.tour.solver} (seed {report.tour.seed}): {report.total_time:.3f} s"
        f"{'  TAINTED' if report.tour.tainted else ''}",
        f"transition {report.transition_time:.3f} s, rotation {report.rotation_time:.3f} s",
        f"NN baseline {report.baseline_time:.3f} s, improvement {report.improvement_rate:+.1%}",
        f"{len(report.tour_ids)} MPs, {report.smp_count} SMPs, {report.rotation_count} rotations, "
        f"{report.segment_count} segments, {report.probe_directions} probe directions",
    ]
    if report.inaccessible:
        lines.append("inaccessible: " + ", ".join(report.inaccessible))
    return "\n".join(lines)


class PlanViewer(App):
    """A read-only Textual viewer for a plan report."""

    CSS = """
    #summary { height: auto; padding: 0 1; }
    #program-table { height: 1fr; }
    """
    BINDINGS = [("q", "quit", "Quit")]

    def __init__(self, report: PlanReport):
        super().__init__()
        self.report = report

    def compose(self) -> ComposeResult:
        """Create child widgets for the app."""
        yield Header()
        with Container(id="app-grid"):
            yield Static(summary_text(self.report), id="summary")
            yield DataTable(id="program-table")
        yield Footer()

    def on_mount(self) -> None:
        self.title = "probepath plan"
        table = self.query_one(DataTable)
        table.add_columns(*CSV_COLUMNS, "mp")
        for index, step in enumerate(self.report.program):
            angles = ["" if v is None else f"{v:g}" for v in (step.a, step.b)]
            table.add_row(str(index), step.kind, *(f"{c:.3f}" for c in step.position), *angles,
                          f"{step.cumulative_time:.3f}", step.mp_id or "")


if __name__ == "__main__":
    import sys

    from probepath.pipeline import load_report

    PlanViewer(load_report(sys.argv[1])).run()
