"""Network anomaly detection: filters, window metrics, detectors, scoring."""
