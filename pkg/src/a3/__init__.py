"""A3 engine: align market event streams with news, label analyst-behavior
tasks, extract PMI trigger keywords, and run the two-stage
opinion-generator-in-the-loop classification pipeline.
"""

__version__ = "0.1.0"
