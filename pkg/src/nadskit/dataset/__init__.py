"""Labelled capture storage: labels, PCAPNG files, dataset library."""
