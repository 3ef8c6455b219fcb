from .csv_writer import read_columns, write_columns
from .plot_script import emit_plot_script

__all__ = ["emit_plot_script", "read_columns", "write_columns"]
