"""Heterogeneity-of-practice analysis for surface height maps.

The toolkit decides, with no external ground truth, whether pairs of image
regions share a making practice: a classifier is trained to tell the two
regions apart, its best validation scores are compared to the exact
chance distribution, verdicts become edges of a same-practice graph, the
graph is pruned by edge uniqueness, and community structure (modularity)
quantifies how heterogeneous the whole dataset is.
"""

__version__ = "0.1.0"
