"""calcert: certify bipartite entanglement from two-party correlation data
under partial knowledge of the measurement devices."""

__version__ = "0.1.0"
