# Shared numeric helpers for marp
