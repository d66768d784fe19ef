# Test package for gherkin-hdl
