"""Change detection and debut-impact analytics for game-streaming
viewership telemetry."""

__version__ = "0.1.0"
