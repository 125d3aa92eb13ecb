"""Training side of the promotion recommender.

Generates simulator-labeled trigger datasets, trains the scorer model
family on them, and exports weight files in the interchange format the
recommender package loads. Deliberately shares no code with that
package: the file formats are the contract, and two independent
implementations of the same arithmetic are what the conformance tests
lean on.
"""

__version__ = "0.1.0"
