"""Neural-signal evaluation of agent performance: simulation, features, learners, reports."""

__version__ = "0.1.0"
