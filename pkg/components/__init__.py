"""Output directories and report tables shared by the commands."""
