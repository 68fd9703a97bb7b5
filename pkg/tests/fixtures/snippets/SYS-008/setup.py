rq = requests.get(url, allow_redirects=True)
open(filename, 'wb').write(rq.content)
