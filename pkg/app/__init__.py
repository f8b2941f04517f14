"""Command-line front end: config files, presets and result emission."""
