"""Column summaries for CSV files."""
