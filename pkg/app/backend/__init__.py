"""File-backed stores of the experiment records."""
