"""Scene simulation package: sea spectrum, surface synthesis, ship wake, radar imaging."""
