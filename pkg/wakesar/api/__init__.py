"""HTTP api package."""
