# Test suite for shotflat
