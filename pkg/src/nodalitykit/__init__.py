"""Nodality of actors in topic-labelled interaction networks.

Inherent (institution-derived) and active (topic-derived) nodality are
estimated from centrality metrics on a topic network and its null
counterpart, then validated against transfer-entropy information flow.
"""

__version__ = "0.1.0"
