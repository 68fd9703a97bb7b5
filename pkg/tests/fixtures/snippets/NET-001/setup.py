ip=urlopen(Request('https://api.ipify.org')).read().decode().strip()
