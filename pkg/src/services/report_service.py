"""
Writers for bound tables, spectral reports and plot data.
"""

import csv
import json
import logging
import math
import os

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("kind", "value", "log10_value", "param_json")


def resolve_output(path):
    """Relative paths are placed under QCS_OUTPUT_DIR when it is set."""
    if path is None or os.path.isabs(path):
        return path
    base = os.getenv("QCS_OUTPUT_DIR")
    return os.path.join(base, path) if base else path


def table_row(kind, value, params, log10_value=None):
    """A CSV row for a value that is not a SpectralBound."""
    if log10_value is None:
        log10_value = math.log10(value) if value > 0 else float("-inf")
    return {
        "kind": kind,
        "value": repr(float(value)),
        "log10_value": repr(float(log10_value)),
        "param_json": json.dumps(params, sort_keys=True),
    }


def write_csv(rows, output_file):
    """
    Write rows with the fixed column schema kind,value,log10_value,param_json.

    Args:
        rows (list): Row dictionaries
        output_file (str): Destination path

    Returns:
        str: The path written
    """
    output_file = resolve_output(output_file)
    with open(output_file, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.info(f"CSV written: {output_file} with {len(rows)} rows")
    return output_file


def write_json(payload, output_file):
    output_file = resolve_output(output_file)
    with open(output_file, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info(f"JSON written: {output_file}")
    return output_file


def write_plot_data(points, output_file, header=("K", "log10_M")):
    """Whitespace-separated columns with a commented header."""
    output_file = resolve_output(output_file)
    with open(output_file, 'w', encoding='utf-8') as f:
        f.write("# " + " ".join(header) + "\n")
        for point in points:
            f.write(" ".join(repr(float(value)) for value in point) + "\n")
    logger.info(f"Plot data written: {output_file} with {len(points)} points")
    return output_file


def plot_data_path(output_file):
    stem, _ = os.path.splitext(output_file)
    return stem + "_plot.dat"


def format_table(rows, columns):
    """Fixed-width text table for stdout."""
    cells = [[str(row.get(column, "")) for column in columns] for row in rows]
    widths = [max([len(column)] + [len(line[k]) for line in cells]) for k, column in enumerate(columns)]
    lines = ["  ".join(column.ljust(width) for column, width in zip(columns, widths))]
    lines.append("  ".join("-" * width for width in widths))
    lines.extend("  ".join(cell.ljust(width) for cell, width in zip(line, widths)) for line in cells)
    return "\n".join(lines)
