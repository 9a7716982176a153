# Tests package for FracAAA backend
