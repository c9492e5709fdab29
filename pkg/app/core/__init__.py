# Shared plumbing: errors, config files, logging, random streams
