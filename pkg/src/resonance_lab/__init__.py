"""Coupling resonance laboratory."""
